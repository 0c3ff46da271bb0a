#include "ceesim/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ceesim::fixture {

namespace {

using Rgb = std::array<double, 3>;

struct Params {
    double x0, y0, speed, bob, hue, pan;
};

Params draw_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {0.40 + 0.03 * u(rng), 0.52 + 0.02 * u(rng), 2.0 + 0.5 * u(rng), 2.0 + 0.5 * u(rng), 0.05 * u(rng),
            1.0 + 0.25 * u(rng)};
}

double ellipse_sd(double px, double py, double cx, double cy, double rx, double ry) {
    const double nx = (px - cx) / rx;
    const double ny = (py - cy) / ry;
    return (std::sqrt(nx * nx + ny * ny) - 1.0) * std::min(rx, ry);
}

Rgb backdrop(double x, double y, int w, int h) {
    const double u = x / w, v = y / h;
    const double shade = 0.03 * std::sin(2.0 * std::numbers::pi * (u + 0.5 * v));
    return {0.42 + 0.08 * u + shade, 0.58 + 0.06 * v + shade, 0.50 - 0.04 * u + shade};
}

Rgb landscape(double x, double y, int w, int h) {
    const double u = x / w, v = y / h;
    const double ridge = 0.55 + 0.08 * std::sin(2.0 * std::numbers::pi * (1.3 * u + 0.1)) +
                         0.04 * std::sin(2.0 * std::numbers::pi * (3.1 * u + 0.4));
    if (v < ridge) {
        const double sd = std::hypot(u - 0.75, v - 0.2) - 0.07;
        const double sun = std::clamp(0.5 - sd * w, 0.0, 1.0);
        Rgb sky{0.45 + 0.3 * v, 0.65 + 0.2 * v, 0.95 - 0.1 * v};
        for (int c = 0; c < 3; ++c) sky[c] = sun * (c == 2 ? 0.7 : 1.0) + (1.0 - sun) * sky[c];
        return sky;
    }
    const double depth = (v - ridge) / (1.0 - ridge);
    return {0.20 + 0.15 * depth, 0.45 - 0.15 * depth, 0.18 + 0.05 * depth};
}

}  // namespace

FixtureSet make_fixture(const FixtureSpec& spec) {
    if (spec.width < 16 || spec.height < 16 || spec.frames < 1)
        throw std::invalid_argument("fixture needs at least 16x16 pixels and one frame");
    const int w = spec.width, h = spec.height;
    const Params p = draw_params(spec.seed);

    Frame plate(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Rgb b = backdrop(x + 0.5, y + 0.5, w, h);
            for (int c = 0; c < 3; ++c) plate.at(x, y, c) = quantize8(b[c]);
        }

    const Rgb skin{0.86 + p.hue, 0.66, 0.52 - p.hue};
    std::vector<Frame> user, scenery;
    std::vector<synthesis::AlphaMatte> mattes;
    for (int t = 0; t < spec.frames; ++t) {
        const double cx = p.x0 * w + p.speed * t;
        const double cy = p.y0 * h + p.bob * std::sin(0.7 * t);
        Frame f(w, h);
        synthesis::AlphaMatte m(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                const double head = ellipse_sd(px, py, cx, cy - 0.22 * h, 0.09 * w, 0.1 * h);
                const double body = ellipse_sd(px, py, cx, cy + 0.14 * h, 0.17 * w, 0.24 * h);
                const double cov = std::clamp(0.5 - std::min(head, body), 0.0, 1.0);
                const double shirt_shade = 0.1 * (py - cy) / h;
                const Rgb fig = head < body ? skin : Rgb{0.20 + shirt_shade, 0.25 + shirt_shade, 0.75 - shirt_shade};
                for (int c = 0; c < 3; ++c)
                    f.at(x, y, c) = quantize8(cov * fig[c] + (1.0 - cov) * plate.at(x, y, c));
                m.at(x, y) = cov;
            }
        user.push_back(std::move(f));
        mattes.push_back(std::move(m));

        Frame s(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const Rgb l = landscape(x + 0.5 + p.pan * t, y + 0.5, w, h);
                for (int c = 0; c < 3; ++c) s.at(x, y, c) = quantize8(l[c]);
            }
        scenery.push_back(std::move(s));
    }
    return {VideoSequence(std::move(user), spec.fps), std::move(plate), VideoSequence(std::move(scenery), spec.fps),
            std::move(mattes)};
}

VideoSequence fixture_clip(const FixtureSpec& spec) { return make_fixture(spec).user; }

}  // namespace ceesim::fixture
