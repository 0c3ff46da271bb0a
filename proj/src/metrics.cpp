#include "ceesim/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace ceesim::metrics {

namespace {

void require_same_shape(const Frame& x, const Frame& y) {
    if (!x.same_shape(y) || x.size() != y.size())
        throw std::invalid_argument("frame dimensions differ: " + std::to_string(x.width()) + "x" +
                                    std::to_string(x.height()) + " vs " + std::to_string(y.width()) + "x" +
                                    std::to_string(y.height()));
}

constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Single-channel plane used by the multi-scale pyramid.
struct Plane {
    int w = 0;
    int h = 0;
    std::vector<double> v;
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel_plane(const Frame& f, int c) {
    Plane p{f.width(), f.height(), std::vector<double>(static_cast<std::size_t>(f.width()) * f.height())};
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) p.v[static_cast<std::size_t>(y) * p.w + x] = f.at(x, y, c);
    return p;
}

Plane halve(const Plane& p) {
    Plane out{p.w / 2, p.h / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.w) * out.h);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.v[static_cast<std::size_t>(y) * out.w + x] =
                0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                        p.at(2 * x + 1, 2 * y + 1));
    return out;
}

// Separable "valid" Gaussian filtering.
Plane filter_valid(const Plane& p, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size());
    Plane tmp{p.w - r + 1, p.h, {}};
    tmp.v.assign(static_cast<std::size_t>(tmp.w) * tmp.h, 0.0);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < tmp.w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < r; ++i) acc += k[i] * p.at(x + i, y);
            tmp.v[static_cast<std::size_t>(y) * tmp.w + x] = acc;
        }
    Plane out{tmp.w, p.h - r + 1, {}};
    out.v.assign(static_cast<std::size_t>(out.w) * out.h, 0.0);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < r; ++i) acc += k[i] * tmp.at(x, y + i);
            out.v[static_cast<std::size_t>(y) * out.w + x] = acc;
        }
    return out;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - (size - 1) / 2.0;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

struct ScaleStats {
    double ssim = 0.0;
    double cs = 0.0;
};

// SSIM and contrast-structure means pooled over pixels and channels.
ScaleStats scale_stats(const std::array<Plane, 3>& xs, const std::array<Plane, 3>& ys,
                       const std::vector<double>& kernel) {
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double ssim_sum = 0.0;
    double cs_sum = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < 3; ++c) {
        const Plane& x = xs[c];
        const Plane& y = ys[c];
        Plane xx = x, yy = y, xy = x;
        for (std::size_t i = 0; i < x.v.size(); ++i) {
            xx.v[i] = x.v[i] * x.v[i];
            yy.v[i] = y.v[i] * y.v[i];
            xy.v[i] = x.v[i] * y.v[i];
        }
        const Plane mx = filter_valid(x, kernel);
        const Plane my = filter_valid(y, kernel);
        const Plane sxx = filter_valid(xx, kernel);
        const Plane syy = filter_valid(yy, kernel);
        const Plane sxy = filter_valid(xy, kernel);
        for (std::size_t i = 0; i < mx.v.size(); ++i) {
            const double vx = sxx.v[i] - mx.v[i] * mx.v[i];
            const double vy = syy.v[i] - my.v[i] * my.v[i];
            const double cov = sxy.v[i] - mx.v[i] * my.v[i];
            const double cs = (2.0 * cov + c2) / (vx + vy + c2);
            const double lum = (2.0 * mx.v[i] * my.v[i] + c1) / (mx.v[i] * mx.v[i] + my.v[i] * my.v[i] + c1);
            cs_sum += cs;
            ssim_sum += lum * cs;
        }
        count += mx.v.size();
    }
    return {ssim_sum / count, cs_sum / count};
}

}  // namespace

double mse(const Frame& x, const Frame& y) {
    require_same_shape(x, y);
    const auto a = x.samples();
    const auto b = y.samples();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value) {
    if (mse_value <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse_value));
}

double psnr(const Frame& x, const Frame& y) { return psnr_from_mse(mse(x, y)); }

int ms_ssim_min_size(const MsSsimOptions& opts) { return opts.window << (opts.scales - 1); }

double ms_ssim(const Frame& x, const Frame& y, const MsSsimOptions& opts) {
    require_same_shape(x, y);
    if (opts.scales < 1 || opts.scales > static_cast<int>(kMsSsimWeights.size()))
        throw std::invalid_argument("MS-SSIM scale count must be in [1,5]");
    const int min_side = ms_ssim_min_size(opts);
    if (std::min(x.width(), x.height()) < min_side)
        throw std::invalid_argument("MS-SSIM with " + std::to_string(opts.scales) +
                                    " scales needs frames of at least " + std::to_string(min_side) + "x" +
                                    std::to_string(min_side) + " pixels");

    double weight_sum = 0.0;
    for (int j = 0; j < opts.scales; ++j) weight_sum += kMsSsimWeights[j];

    const auto kernel = gaussian_kernel(opts.window, opts.sigma);
    std::array<Plane, 3> xs{channel_plane(x, 0), channel_plane(x, 1), channel_plane(x, 2)};
    std::array<Plane, 3> ys{channel_plane(y, 0), channel_plane(y, 1), channel_plane(y, 2)};
    double result = 1.0;
    for (int j = 0; j < opts.scales; ++j) {
        const ScaleStats s = scale_stats(xs, ys, kernel);
        const double w = kMsSsimWeights[j] / weight_sum;
        const bool last = j == opts.scales - 1;
        const double term = std::max(0.0, last ? s.ssim : s.cs);
        result *= std::pow(term, w);
        if (!last)
            for (int c = 0; c < 3; ++c) {
                xs[c] = halve(xs[c]);
                ys[c] = halve(ys[c]);
            }
    }
    return std::clamp(result, 0.0, 1.0);
}

double mean_psnr(const std::vector<Frame>& x, const std::vector<Frame>& y) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("sequence lengths differ or are empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += psnr(x[i], y[i]);
    return acc / static_cast<double>(x.size());
}

double mean_ms_ssim(const std::vector<Frame>& x, const std::vector<Frame>& y, const MsSsimOptions& opts) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("sequence lengths differ or are empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += ms_ssim(x[i], y[i], opts);
    return acc / static_cast<double>(x.size());
}

namespace {

void require_same_count(std::size_t a, std::size_t b) {
    if (a != b)
        throw std::invalid_argument("cardinality mismatch: " + std::to_string(a) + " predicted vs " +
                                    std::to_string(b) + " ground-truth");
    if (a == 0) throw std::invalid_argument("point/box sets must be non-empty");
}

double distance(const Point3& a, const Point3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

}  // namespace

double epe(const PointSet3D& pred, const PointSet3D& gt) {
    require_same_count(pred.size(), gt.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += distance(pred[i], gt[i]);
    return acc / static_cast<double>(pred.size());
}

double pck(const PointSet3D& pred, const PointSet3D& gt, double tau) {
    require_same_count(pred.size(), gt.size());
    if (!(tau > 0.0)) throw std::invalid_argument("PCK threshold must be positive");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (distance(pred[i], gt[i]) < tau) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double box_iou(const Box2& a, const Box2& b) {
    const double ix = std::max(0.0, std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x));
    const double iy = std::max(0.0, std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y));
    const double inter = ix * iy;
    const double area_a = (a.max_x - a.min_x) * (a.max_y - a.min_y);
    const double area_b = (b.max_x - b.min_x) * (b.max_y - b.min_y);
    const double uni = area_a + area_b - inter;
    if (!(uni > 0.0)) return 0.0;
    return inter / uni;
}

double average_jaccard(const BoxSet& pred, const BoxSet& gt) {
    require_same_count(pred.size(), gt.size());
    double acc = 0.0;
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto& a = pred[i];
        const auto& b = gt[i];
        if (a.min_x > a.max_x || a.min_y > a.max_y || b.min_x > b.max_x || b.min_y > b.max_y)
            throw std::invalid_argument("box has min corner greater than max corner");
        const double area_a = (a.max_x - a.min_x) * (a.max_y - a.min_y);
        const double area_b = (b.max_x - b.min_x) * (b.max_y - b.min_y);
        if (!(area_a + area_b > 0.0)) {
            ++degenerate;
            continue;
        }
        acc += box_iou(a, b);
    }
    if (degenerate > 0)
        std::cerr << "warning: average_jaccard: " << degenerate << " box pair(s) with zero-area union counted as 0\n";
    return acc / static_cast<double>(pred.size());
}

}  // namespace ceesim::metrics
