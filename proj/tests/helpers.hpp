#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ceesim/video.hpp"

namespace testing_helpers {

inline ceesim::Frame random_frame(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ceesim::Frame f(w, h);
    for (double& v : f.samples()) v = u(rng);
    return f;
}

// Smooth pattern with some texture, quantized to 8 bits.
inline ceesim::Frame smooth_frame(int w, int h, double phase) {
    ceesim::Frame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = 0.5 + 0.3 * std::sin(0.11 * x + 0.07 * y + phase + c) +
                                 0.1 * std::cos(0.31 * x - 0.23 * y + 2.0 * c);
                f.at(x, y, c) = ceesim::quantize8(std::clamp(v, 0.0, 1.0));
            }
    return f;
}

inline ceesim::VideoSequence frames_video(int n, int w, int h, double fps = 25.0) {
    std::vector<ceesim::Frame> frames;
    for (int i = 0; i < n; ++i) frames.push_back(smooth_frame(w, h, 0.2 * i));
    return {frames, fps};
}

}  // namespace testing_helpers
