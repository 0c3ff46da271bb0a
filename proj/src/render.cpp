#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ceesim/scene.hpp"
#include "scene_geometry.hpp"

namespace ceesim::scene {

namespace detail {

FrameSplats frame_splats(const GaussianScene& scene, int t, const Camera& cam) {
    if (t < 0 || t >= scene.timesteps) throw std::out_of_range("timestep out of range");
    std::vector<RigidTransform> bases_t;
    for (const auto& b : scene.bases.bases) bases_t.push_back(b.at(t));
    const std::vector<double> zeros(gaussian_params(scene.bases.count()), 0.0);
    FrameSplats fs;
    fs.splats.reserve(scene.gaussians.size());
    for (const auto& g : scene.gaussians) fs.splats.push_back(splat<double>(g, bases_t, zeros.data(), nullptr, cam));
    for (int i = 0; i < static_cast<int>(fs.splats.size()); ++i)
        if (fs.splats[i].visible) fs.order.push_back(i);
    std::stable_sort(fs.order.begin(), fs.order.end(),
                     [&](int a, int b) { return fs.splats[a].depth < fs.splats[b].depth; });
    return fs;
}

namespace {

struct Box {
    int x0, x1, y0, y1;
};

Box splat_box(const Splat<double>& s, int width, int height) {
    const double r = splat_radius(s);
    return {std::max(0, static_cast<int>(std::floor(s.u - r))), std::min(width - 1, static_cast<int>(std::ceil(s.u + r))),
            std::max(0, static_cast<int>(std::floor(s.v - r))), std::min(height - 1, static_cast<int>(std::ceil(s.v + r)))};
}

}  // namespace

HitBuffer composite_hits(const FrameSplats& fs, int width, int height) {
    HitBuffer hb;
    hb.width = width;
    hb.height = height;
    hb.hits.assign(static_cast<std::size_t>(width) * height, {});
    hb.final_T.assign(hb.hits.size(), 1.0);
    for (int i : fs.order) {
        const auto& s = fs.splats[i];
        const Box b = splat_box(s, width, height);
        for (int y = b.y0; y <= b.y1; ++y)
            for (int x = b.x0; x <= b.x1; ++x) {
                const double a = splat_alpha(s, x, y);
                if (a < kMinAlpha) continue;
                const std::size_t p = static_cast<std::size_t>(y) * width + x;
                hb.hits[p].push_back({i, a, hb.final_T[p]});
                hb.final_T[p] *= 1.0 - a;
            }
    }
    return hb;
}

}  // namespace detail

RenderOutput render(const GaussianScene& scene, int t) {
    if (t < 0 || t >= static_cast<int>(scene.cameras.size())) throw std::out_of_range("timestep out of range");
    return render(scene, t, scene.cameras[t]);
}

RenderOutput render(const GaussianScene& scene, int t, const Camera& cam) {
    const auto fs = detail::frame_splats(scene, t, cam);
    const int w = cam.width, h = cam.height;
    RenderOutput out{Frame(w, h), std::vector<double>(static_cast<std::size_t>(w) * h, 0.0),
                     std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)};
    std::vector<double> T(out.depth.size(), 1.0);
    std::vector<double> color(out.depth.size() * 3, 0.0);
    for (int i : fs.order) {
        const auto& s = fs.splats[i];
        const double r = detail::splat_radius(s);
        const int x0 = std::max(0, static_cast<int>(std::floor(s.u - r)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(s.u + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(s.v - r)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(s.v + r)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double a = detail::splat_alpha(s, x, y);
                if (a < detail::kMinAlpha) continue;
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const double wgt = T[p] * a;
                for (int c = 0; c < 3; ++c) color[p * 3 + c] += wgt * s.color[c];
                out.depth[p] += wgt * s.depth;
                T[p] *= 1.0 - a;
            }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = color[p * 3 + c] + T[p] * scene.background[c];
            out.opacity[p] = 1.0 - T[p];
        }
    out.image.clamp();
    return out;
}

TrackResult track_correspondence(const GaussianScene& scene, const Vec2& p, int t, int t_prime) {
    if (t < 0 || t >= scene.timesteps || t_prime < 0 || t_prime >= scene.timesteps)
        throw std::out_of_range("timestep out of range");
    const Camera& cam = scene.cameras[t];
    const auto fs = detail::frame_splats(scene, t, cam);
    const auto fs2 = detail::frame_splats(scene, t_prime, scene.cameras[t_prime]);

    double T = 1.0, depth = 0.0;
    std::vector<std::pair<int, double>> weights;
    for (int i : fs.order) {
        const double a = detail::splat_alpha(fs.splats[i], p.x(), p.y());
        if (a < detail::kMinAlpha) continue;
        weights.emplace_back(i, T * a);
        depth += T * a * fs.splats[i].depth;
        T *= 1.0 - a;
    }
    const double acc = 1.0 - T;
    if (acc < 1e-3) throw std::runtime_error("track_correspondence: pixel is not covered by any Gaussian");
    depth /= acc;

    const Vec3 ray = cam.K.inverse() * Vec3(p.x(), p.y(), 1.0);
    const Vec3 X = cam.E.inverse().apply(ray * depth);
    Vec3 moved = Vec3::Zero();
    for (const auto& [i, w] : weights) {
        const auto& a = fs.splats[i];
        const auto& b = fs2.splats[i];
        moved += (w / acc) * (b.R * a.R.transpose() * (X - a.mu) + b.mu);
    }
    const Camera& cam2 = scene.cameras[t_prime];
    const Vec3 Xc = cam2.E.apply(moved);
    if (!(Xc.z() > detail::kNearDepth)) throw std::runtime_error("track_correspondence: point leaves the view frustum");
    const Vec3 uvw = cam2.K * Xc;
    return {Vec2(uvw.x() / uvw.z(), uvw.y() / uvw.z()), Xc.z()};
}

}  // namespace ceesim::scene
