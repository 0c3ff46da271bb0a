#pragma once

#include <cstdint>
#include <vector>

#include "ceesim/video.hpp"

namespace ceesim::synthesis {

/// Per-pixel foreground opacity in [0,1], row-major.
struct AlphaMatte {
    int width = 0;
    int height = 0;
    std::vector<double> alpha;

    AlphaMatte() = default;
    AlphaMatte(int w, int h, double fill = 0.0);

    double at(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return alpha[static_cast<std::size_t>(y) * width + x]; }
    bool same_shape(const AlphaMatte& o) const { return width == o.width && height == o.height; }
};

/// Binary mask of the boundary band around the foreground.
struct TransitionMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;

    std::size_t count() const;
    std::uint8_t at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x]; }
};

struct SynthesisSettings {
    /// Color distance (RGB Euclidean / sqrt(3)) at the middle of the ramp.
    double threshold = 0.1;
    /// Width of the linear ramp around the threshold.
    double softness = 0.05;
    /// Dilation/erosion radius for the transition band.
    int radius = 2;
    /// Downsampling factor of the semantic-branch thumbnail.
    int thumbnail_factor = 4;
};

/// Background-difference matting:
/// alpha = clamp((d - (threshold - softness/2)) / softness, 0, 1).
AlphaMatte estimate_matte(const Frame& fg, const Frame& bg, double threshold, double softness);

/// dilate(B) XOR erode(B) with a (2r+1)^2 square, B = alpha >= 0.5.
/// Neighbours outside the frame are ignored.
TransitionMask transition_mask(const AlphaMatte& alpha_g, int radius);

/// Box-filter thumbnail, ceil(dim / factor), edges replicated.
AlphaMatte downsample_matte(const AlphaMatte& alpha, int factor);

/// 0.5 * mean squared difference between s_p and the thumbnail of alpha_g.
double semantic_loss(const AlphaMatte& s_p, const AlphaMatte& alpha_g, int factor);

/// Mean absolute difference over pixels inside m_d (0 for an empty mask).
double detail_loss(const AlphaMatte& d_p, const AlphaMatte& alpha_g, const TransitionMask& m_d);

struct FusionTerms {
    double matte = 0.0;          // mean |alpha_p - alpha_g|
    double compositional = 0.0;  // mean |I_p - I_g| over samples
    double total() const { return matte + compositional; }
};

FusionTerms fusion_terms(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const Frame& fg, const Frame& bg);
double fusion_loss(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const Frame& fg, const Frame& bg);

/// alpha * x_hat + (1 - alpha) * b_hat.
Frame composite(const Frame& x_hat, const Frame& b_hat, const AlphaMatte& alpha);

/// Intersection over union of the binarized (>= 0.5) mattes; 1 if both are empty.
double matte_iou(const AlphaMatte& a, const AlphaMatte& b);

struct SynthesisOutput {
    VideoSequence video;
    std::vector<AlphaMatte> mattes;
};

/// Mattes each user frame against the clean plate and composites it over the
/// background; the background loops if it is shorter than the user video.
SynthesisOutput synthesize(const VideoSequence& user, const Frame& clean_plate, const VideoSequence& background,
                           const SynthesisSettings& s = {});

}  // namespace ceesim::synthesis
