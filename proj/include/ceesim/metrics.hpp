#pragma once

#include <vector>

#include "ceesim/video.hpp"

namespace ceesim::metrics {

/// PSNR returned for identical inputs.
inline constexpr double kPsnrCapDb = 100.0;

/// Mean squared error over every sample of every channel.
double mse(const Frame& x, const Frame& y);

/// 10·log10(1 / MSE); peak is 1 because samples live in [0,1].
double psnr(const Frame& x, const Frame& y);
double psnr_from_mse(double mse_value);

struct MsSsimOptions {
    int scales = 5;
    int window = 11;
    double sigma = 1.5;
};

/// Smallest frame side accepted by ms_ssim for the given options.
int ms_ssim_min_size(const MsSsimOptions& opts = {});

/// Multi-scale SSIM with the standard five-scale exponents
/// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333). Statistics are pooled over the
/// three color channels at each scale; negative per-scale terms are clamped
/// to zero so the result stays in [0,1]. With fewer scales the leading
/// exponents are used and renormalized to sum to one.
double ms_ssim(const Frame& x, const Frame& y, const MsSsimOptions& opts = {});

/// Means over all frames of a pair of equal-length sequences.
double mean_psnr(const std::vector<Frame>& x, const std::vector<Frame>& y);
double mean_ms_ssim(const std::vector<Frame>& x, const std::vector<Frame>& y, const MsSsimOptions& opts = {});

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};
using PointSet3D = std::vector<Point3>;

struct Box2 {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
};
using BoxSet = std::vector<Box2>;

/// Mean Euclidean distance between corresponding points.
double epe(const PointSet3D& pred, const PointSet3D& gt);

/// Fraction of points with distance strictly below tau.
double pck(const PointSet3D& pred, const PointSet3D& gt, double tau);

double box_iou(const Box2& a, const Box2& b);

/// Mean IoU over corresponding boxes. Pairs with zero-area union count as 0
/// and emit a warning on stderr.
double average_jaccard(const BoxSet& pred, const BoxSet& gt);

}  // namespace ceesim::metrics
