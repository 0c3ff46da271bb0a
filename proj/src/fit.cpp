#include "ceesim/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ceesim/metrics.hpp"
#include "scene_geometry.hpp"

namespace ceesim::scene {

namespace {

using detail::AD;
using detail::lift;

// Per-(Gaussian, time) output slots fed into the geometry Jacobian.
enum Slot { kU = 0, kV, kCa, kCb, kCc, kDepth, kOpacity, kColor, kMu = 10, kR = 13, kSlots = 22 };
using SlotVec = Eigen::Matrix<double, kSlots, 1>;

struct Layout {
    int G, B, T;
    bool bases;
    int per_gaussian() const { return detail::gaussian_params(B); }
    int gaussian(int i) const { return i * per_gaussian(); }
    int basis(int b, int t) const { return G * per_gaussian() + (b * (T - 1) + (t - 1)) * detail::kBasisParams; }
    int size() const { return G * per_gaussian() + (bases ? B * (T - 1) * detail::kBasisParams : 0); }
};

Layout layout_of(const GaussianScene& s, bool with_bases) {
    return {static_cast<int>(s.gaussians.size()), s.bases.count(), s.timesteps, with_bases};
}

double charbonnier(double r, double eps) { return std::sqrt(r * r + eps * eps) - eps; }
double charbonnier_grad(double r, double eps) { return r / std::sqrt(r * r + eps * eps); }

std::vector<RigidTransform> bases_at(const GaussianScene& s, int t) {
    std::vector<RigidTransform> out;
    for (const auto& b : s.bases.bases) out.push_back(b[t]);
    return out;
}

void check_observations(const GaussianScene& scene, const Observations& obs) {
    scene.validate();
    const auto T = static_cast<std::size_t>(scene.timesteps);
    if (obs.frames.size() != T) throw std::invalid_argument("observation frame count differs from scene timesteps");
    if (obs.cameras.size() != T) throw std::invalid_argument("observation camera count differs from scene timesteps");
    if (!obs.depths.empty() && obs.depths.size() != T) throw std::invalid_argument("depth map count differs from frames");
    for (std::size_t t = 0; t < T; ++t) {
        const auto& c = obs.cameras[t];
        if (obs.frames[t].width() != c.width || obs.frames[t].height() != c.height)
            throw std::invalid_argument("frame size differs from camera image size");
        if (!obs.depths.empty() && obs.depths[t].size() != static_cast<std::size_t>(c.width) * c.height)
            throw std::invalid_argument("depth map size differs from camera image size");
    }
    for (const auto& tr : obs.tracks)
        if (tr.t < 0 || tr.t >= scene.timesteps || tr.t_prime < 0 || tr.t_prime >= scene.timesteps)
            throw std::invalid_argument("track timestep out of range");
}

// Inputs per contributing Gaussian: u, v, ca, cb, cc, depth, opacity,
// mu_t(3), R_t(9), mu_t'(3), R_t'(9).
constexpr int kTrackInputs = 31;

template <class T>
Eigen::Matrix<T, 2, 1> track_predict(const std::vector<T>& x, double px, double py, const Camera& cam,
                                     const Camera& cam2) {
    using std::exp;
    const int k = static_cast<int>(x.size()) / kTrackInputs;
    T Tr = lift(1.0, x[0]), dep = lift(0.0, x[0]);
    std::vector<T> w(k);
    for (int j = 0; j < k; ++j) {
        const T* g = &x[j * kTrackInputs];
        const T dx = px - g[0], dy = py - g[1];
        const T q = g[2] * dx * dx + 2.0 * g[3] * dx * dy + g[4] * dy * dy;
        const T a = g[6] * exp(-0.5 * q);
        w[j] = Tr * a;
        dep += w[j] * g[5];
        Tr = Tr * (1.0 - a);
    }
    const T acc = 1.0 - Tr;
    dep = dep / acc;
    const Vec3 ray = cam.K.inverse() * Vec3(px, py, 1.0);
    detail::V3<T> Xc;
    for (int c = 0; c < 3; ++c) Xc[c] = ray[c] * dep - cam.E.t[c];
    const detail::V3<T> X = lift(Mat3(cam.E.R.transpose()), x[0]) * Xc;
    detail::V3<T> moved = lift(Vec3::Zero().eval(), x[0]);
    for (int j = 0; j < k; ++j) {
        const T* g = &x[j * kTrackInputs];
        detail::V3<T> mu, mu2;
        detail::M3<T> R, R2;
        for (int c = 0; c < 3; ++c) {
            mu[c] = g[7 + c];
            mu2[c] = g[19 + c];
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                R(r, c) = g[10 + r * 3 + c];
                R2(r, c) = g[22 + r * 3 + c];
            }
        moved += (w[j] / acc) * (R2 * (R.transpose() * (X - mu)) + mu2);
    }
    const detail::V3<T> Y = lift(cam2.E.R, x[0]) * moved + lift(cam2.E.t, x[0]);
    const detail::V3<T> uvw = lift(cam2.K, x[0]) * Y;
    return {uvw[0] / uvw[2], uvw[1] / uvw[2]};
}

void push_splat_inputs(std::vector<double>& x, const detail::Splat<double>& s) {
    x.insert(x.end(), {s.u, s.v, s.ca, s.cb, s.cc, s.depth, s.opacity});
    for (int c = 0; c < 3; ++c) x.push_back(s.mu[c]);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) x.push_back(s.R(r, c));
}

void push_motion_inputs(std::vector<double>& x, const detail::Splat<double>& s) {
    for (int c = 0; c < 3; ++c) x.push_back(s.mu[c]);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) x.push_back(s.R(r, c));
}

struct Evaluation {
    LossTerms loss;
    Eigen::VectorXd gradient;
};

Evaluation evaluate(const GaussianScene& scene, const Observations& obs, const FitConfig& cfg, bool want_grad,
                    bool with_bases) {
    check_observations(scene, obs);
    const Layout L = layout_of(scene, with_bases);
    const int G = L.G, T = L.T;
    const double eps = cfg.charbonnier_eps;

    std::vector<detail::FrameSplats> frames;
    frames.reserve(T);
    for (int t = 0; t < T; ++t) frames.push_back(detail::frame_splats(scene, t, obs.cameras[t]));

    std::vector<std::vector<SlotVec>> slot_grad;
    if (want_grad) slot_grad.assign(T, std::vector<SlotVec>(G, SlotVec::Zero()));

    Evaluation ev;
    double n_img = 0.0, n_depth = 0.0;
    for (int t = 0; t < T; ++t) {
        n_img += 3.0 * obs.cameras[t].width * obs.cameras[t].height;
        n_depth += static_cast<double>(obs.cameras[t].width) * obs.cameras[t].height;
    }
    const bool use_depth = !obs.depths.empty() && cfg.weight_depth != 0.0;

    for (int t = 0; t < T; ++t) {
        const Camera& cam = obs.cameras[t];
        const auto& fs = frames[t];
        const auto hb = detail::composite_hits(fs, cam.width, cam.height);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
                const auto& hits = hb.hits[p];
                const double observed = use_depth ? obs.depths[t][p] : 0.0;
                const bool has_depth = use_depth && observed > 0.0;
                Vec3 C = hb.final_T[p] * scene.background;
                double D = 0.0;
                for (const auto& h : hits) {
                    const auto& s = fs.splats[h.gaussian];
                    C += h.T * h.alpha * s.color;
                    D += h.T * h.alpha * (s.depth - observed);
                }
                Vec3 gC;
                for (int c = 0; c < 3; ++c) {
                    const double r = C[c] - obs.frames[t].at(x, y, c);
                    ev.loss.image += charbonnier(r, eps);
                    gC[c] = cfg.weight_image * charbonnier_grad(r, eps) / n_img;
                }
                double gD = 0.0;
                if (has_depth) {
                    ev.loss.depth += charbonnier(D, eps);
                    gD = cfg.weight_depth * charbonnier_grad(D, eps) / n_depth;
                }
                if (!want_grad) continue;
                Vec3 rest_c = scene.background;
                double rest_d = 0.0;
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    const auto& s = fs.splats[it->gaussian];
                    SlotVec& g = slot_grad[t][it->gaussian];
                    const double a = it->alpha, Tr = it->T;
                    const double d_alpha = Tr * (gC.dot(s.color - rest_c) + gD * (s.depth - observed - rest_d));
                    for (int c = 0; c < 3; ++c) g[kColor + c] += gC[c] * Tr * a;
                    g[kDepth] += gD * Tr * a;
                    g[kOpacity] += d_alpha * a / s.opacity;
                    const double d_q = -0.5 * a * d_alpha;
                    const double dx = x - s.u, dy = y - s.v;
                    g[kU] += d_q * -2.0 * (s.ca * dx + s.cb * dy);
                    g[kV] += d_q * -2.0 * (s.cb * dx + s.cc * dy);
                    g[kCa] += d_q * dx * dx;
                    g[kCb] += d_q * 2.0 * dx * dy;
                    g[kCc] += d_q * dy * dy;
                    rest_c = a * s.color + (1.0 - a) * rest_c;
                    rest_d = a * (s.depth - observed) + (1.0 - a) * rest_d;
                }
            }
    }
    ev.loss.image /= n_img;
    if (use_depth) ev.loss.depth /= n_depth;

    if (cfg.weight_track != 0.0 && !obs.tracks.empty()) {
        const double n_tracks = static_cast<double>(obs.tracks.size());
        for (const auto& tr : obs.tracks) {
            const auto& fs = frames[tr.t];
            const auto& fs2 = frames[tr.t_prime];
            std::vector<int> who;
            double Tr = 1.0;
            for (int i : fs.order) {
                const double a = detail::splat_alpha(fs.splats[i], tr.p.x(), tr.p.y());
                if (a < detail::kMinAlpha) continue;
                who.push_back(i);
                Tr *= 1.0 - a;
            }
            if (1.0 - Tr < 1e-3) continue;
            std::vector<double> x;
            for (int i : who) {
                push_splat_inputs(x, fs.splats[i]);
                push_motion_inputs(x, fs2.splats[i]);
            }
            const auto& c1 = obs.cameras[tr.t];
            const auto& c2 = obs.cameras[tr.t_prime];
            if (!want_grad) {
                const auto uv = track_predict<double>(x, tr.p.x(), tr.p.y(), c1, c2);
                for (int c = 0; c < 2; ++c) ev.loss.track += charbonnier(uv[c] - tr.target[c], eps) / n_tracks;
                continue;
            }
            const int n = static_cast<int>(x.size());
            std::vector<AD> xa(n);
            for (int k = 0; k < n; ++k) xa[k] = AD(x[k], n, k);
            const auto uv = track_predict<AD>(xa, tr.p.x(), tr.p.y(), c1, c2);
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(n);
            for (int c = 0; c < 2; ++c) {
                const double r = uv[c].value() - tr.target[c];
                ev.loss.track += charbonnier(r, eps) / n_tracks;
                if (uv[c].derivatives().size() == n)
                    dx += cfg.weight_track * charbonnier_grad(r, eps) / n_tracks * uv[c].derivatives();
            }
            for (std::size_t j = 0; j < who.size(); ++j) {
                const double* d = dx.data() + j * kTrackInputs;
                SlotVec& g = slot_grad[tr.t][who[j]];
                for (int k = 0; k < 7; ++k) g[k] += d[k];
                for (int k = 0; k < 12; ++k) g[kMu + k] += d[7 + k];
                SlotVec& g2 = slot_grad[tr.t_prime][who[j]];
                for (int k = 0; k < 12; ++k) g2[kMu + k] += d[19 + k];
            }
        }
    }
    ev.loss.total = cfg.weight_image * ev.loss.image + cfg.weight_depth * ev.loss.depth + cfg.weight_track * ev.loss.track;
    if (!want_grad) return ev;

    ev.gradient = Eigen::VectorXd::Zero(L.size());
    const int pg = L.per_gaussian();
    for (int t = 0; t < T; ++t) {
        const auto bt = bases_at(scene, t);
        const bool basis_vars = with_bases && t >= 1;
        const int n = pg + (basis_vars ? L.B * detail::kBasisParams : 0);
        std::vector<AD> vars(n);
        for (int k = 0; k < n; ++k) vars[k] = AD(0.0, n, k);
        for (int i = 0; i < G; ++i) {
            const SlotVec& g = slot_grad[t][i];
            if (g.isZero(0.0)) continue;
            const auto s = detail::splat<AD>(scene.gaussians[i], bt, vars.data(), basis_vars ? vars.data() + pg : nullptr,
                                             obs.cameras[t]);
            Eigen::VectorXd local = Eigen::VectorXd::Zero(n);
            auto add = [&](const AD& y, double w) {
                if (w != 0.0 && y.derivatives().size() == n) local += w * y.derivatives();
            };
            if (s.visible) {
                add(s.u, g[kU]);
                add(s.v, g[kV]);
                add(s.ca, g[kCa]);
                add(s.cb, g[kCb]);
                add(s.cc, g[kCc]);
                add(s.depth, g[kDepth]);
                add(s.opacity, g[kOpacity]);
                for (int c = 0; c < 3; ++c) add(s.color[c], g[kColor + c]);
            }
            for (int c = 0; c < 3; ++c) add(s.mu[c], g[kMu + c]);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) add(s.R(r, c), g[kR + r * 3 + c]);
            ev.gradient.segment(L.gaussian(i), pg) += local.head(pg);
            if (basis_vars)
                for (int b = 0; b < L.B; ++b)
                    ev.gradient.segment(L.basis(b, t), detail::kBasisParams) +=
                        local.segment(pg + b * detail::kBasisParams, detail::kBasisParams);
        }
    }
    return ev;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Quat small_rotation(const Vec3& w) { return Quat(exp_so3(w)); }

}  // namespace

std::vector<double> surface_depth(const RenderOutput& r, double min_opacity) {
    std::vector<double> out(r.depth.size(), 0.0);
    for (std::size_t p = 0; p < out.size(); ++p)
        if (r.opacity[p] > min_opacity) out[p] = r.depth[p] / r.opacity[p];
    return out;
}

int parameter_count(const GaussianScene& scene, bool with_bases) { return layout_of(scene, with_bases).size(); }

GaussianScene retract(const GaussianScene& scene, const Eigen::VectorXd& step, bool with_bases) {
    const Layout L = layout_of(scene, with_bases);
    if (step.size() != L.size()) throw std::invalid_argument("step size differs from parameter count");
    GaussianScene out = scene;
    for (int i = 0; i < L.G; ++i) {
        auto& g = out.gaussians[i];
        const auto d = step.segment(L.gaussian(i), L.per_gaussian());
        g.mu0 += d.segment<3>(0);
        g.R0 = (small_rotation(d.segment<3>(3)) * g.R0).normalized();
        for (int k = 0; k < 3; ++k) g.scales[k] *= std::exp(d[6 + k]);
        g.opacity = std::clamp(sigmoid(detail::logit(g.opacity) + d[9]), 1e-6, 1.0 - 1e-6);
        for (int c = 0; c < 3; ++c) g.color[c] = std::clamp(sigmoid(detail::logit(g.color[c]) + d[10 + c]), 1e-9, 1.0 - 1e-9);
        for (int b = 0; b < L.B; ++b) g.motion_logits[b] += d[detail::kGaussianFixed + b];
    }
    if (with_bases)
        for (int b = 0; b < L.B; ++b)
            for (int t = 1; t < L.T; ++t) {
                auto& T = out.bases.bases[b][t];
                const auto d = step.segment(L.basis(b, t), detail::kBasisParams);
                T.t += d.head<3>();
                T.R = (small_rotation(d.tail<3>()) * Quat(T.R)).normalized().toRotationMatrix();
            }
    return out;
}

LossTerms scene_loss(const GaussianScene& scene, const Observations& obs, const FitConfig& cfg) {
    return evaluate(scene, obs, cfg, false, cfg.optimize_bases).loss;
}

LossGradient loss_gradient(const GaussianScene& scene, const Observations& obs, const FitConfig& cfg) {
    auto ev = evaluate(scene, obs, cfg, true, cfg.optimize_bases);
    return {ev.loss, std::move(ev.gradient)};
}

FitResult fit_scene(const Observations& obs, const GaussianScene& init, const FitConfig& cfg) {
    if (obs.frames.size() < 2) throw std::invalid_argument("fit_scene needs at least two frames");
    if (cfg.iterations < 0) throw std::invalid_argument("iteration count must be non-negative");
    GaussianScene scene = init;
    const bool wb = cfg.optimize_bases;
    const Layout L = layout_of(scene, wb);

    Eigen::VectorXd lr(L.size());
    for (int i = 0; i < L.G; ++i) {
        auto seg = lr.segment(L.gaussian(i), L.per_gaussian());
        seg.segment<3>(0).setConstant(cfg.lr_position);
        seg.segment<3>(3).setConstant(cfg.lr_rotation);
        seg.segment<3>(6).setConstant(cfg.lr_scale);
        seg[9] = cfg.lr_opacity;
        seg.segment<3>(10).setConstant(cfg.lr_color);
        seg.tail(L.B).setConstant(cfg.lr_motion);
    }
    if (wb)
        for (int b = 0; b < L.B; ++b)
            for (int t = 1; t < L.T; ++t) {
                lr.segment<3>(L.basis(b, t)).setConstant(cfg.lr_basis_translation);
                lr.segment<3>(L.basis(b, t) + 3).setConstant(cfg.lr_basis_rotation);
            }

    auto diagnose = [](int it, const LossTerms& l) {
        std::ostringstream os;
        os << "fit_scene diverged at iteration " << it << ": image=" << l.image << " depth=" << l.depth
           << " track=" << l.track;
        return std::runtime_error(os.str());
    };

    FitResult res;
    auto cur = loss_gradient(scene, obs, cfg);
    if (!std::isfinite(cur.loss.total) || !cur.gradient.allFinite()) throw diagnose(0, cur.loss);
    res.report.initial = cur.loss;
    res.report.history.push_back(cur.loss.total);

    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(L.size()), v = Eigen::VectorXd::Zero(L.size());
    double scale = 1.0;
    for (int it = 1; it <= cfg.iterations; ++it) {
        m = b1 * m + (1.0 - b1) * cur.gradient;
        v = b2 * v + (1.0 - b2) * cur.gradient.cwiseProduct(cur.gradient);
        const Eigen::VectorXd mh = m / (1.0 - std::pow(b1, it));
        const Eigen::VectorXd vh = v / (1.0 - std::pow(b2, it));
        const Eigen::VectorXd step = -scale * lr.cwiseProduct(mh.cwiseQuotient((vh.cwiseSqrt().array() + adam_eps).matrix()));
        GaussianScene cand = retract(scene, step, wb);
        auto next = loss_gradient(cand, obs, cfg);
        if (!std::isfinite(next.loss.total) || !next.gradient.allFinite()) throw diagnose(it, next.loss);
        if (next.loss.total <= cur.loss.total) {
            scene = std::move(cand);
            cur = std::move(next);
            ++res.report.accepted;
            res.report.history.push_back(cur.loss.total);
            scale = std::min(1.0, scale * 1.25);
        } else {
            ++res.report.rejected;
            scale *= 0.5;
            if (scale < cfg.min_step_scale) break;
        }
    }
    res.report.final = cur.loss;
    res.scene = std::move(scene);
    return res;
}

constexpr double kSeedStagger = 0.01;

GaussianScene initialize_from_frames(const Observations& obs, int grid, double depth, int basis_count) {
    if (obs.frames.empty() || obs.cameras.size() != obs.frames.size())
        throw std::invalid_argument("initialize_from_frames needs frames with cameras");
    if (grid < 1 || !(depth > 0.0)) throw std::invalid_argument("grid must be >= 1 and depth positive");
    const Camera& cam = obs.cameras.front();
    const Frame& f = obs.frames.front();
    GaussianScene s;
    s.timesteps = static_cast<int>(obs.frames.size());
    s.cameras = obs.cameras;
    s.bases = MotionBasisSet::identity(basis_count, s.timesteps);
    const double cw = static_cast<double>(cam.width) / grid, ch = static_cast<double>(cam.height) / grid;
    const RigidTransform to_world = cam.E.inverse();
    const Mat3 Kinv = cam.K.inverse();
    const double extent = 0.75 * depth * std::max(cw / cam.K(0, 0), ch / cam.K(1, 1));
    for (int gy = 0; gy < grid; ++gy)
        for (int gx = 0; gx < grid; ++gx) {
            const double px = (gx + 0.5) * cw - 0.5, py = (gy + 0.5) * ch - 0.5;
            Gaussian3D g;
            // Distinct seed depths: ties in the depth sort make the loss jump
            // under the smallest step.
            const double rank = static_cast<double>(gy * grid + gx) / (grid * grid);
            const double z = depth * (1.0 + kSeedStagger * (((gx + gy) % 2 ? 1.0 : -1.0) + 0.5 * rank));
            g.mu0 = to_world.apply(Kinv * Vec3(px, py, 1.0) * z);
            g.scales = Vec3::Constant(extent);
            g.opacity = 0.9;
            Vec3 c = Vec3::Zero();
            int n = 0;
            for (int y = static_cast<int>(gy * ch); y < std::min(cam.height, static_cast<int>((gy + 1) * ch)); ++y)
                for (int x = static_cast<int>(gx * cw); x < std::min(cam.width, static_cast<int>((gx + 1) * cw)); ++x) {
                    for (int k = 0; k < 3; ++k) c[k] += f.at(x, y, k);
                    ++n;
                }
            g.color = n ? Vec3(c / n) : Vec3::Constant(0.5);
            for (int k = 0; k < 3; ++k) g.color[k] = std::clamp(g.color[k], 0.02, 0.98);
            g.motion_logits.assign(basis_count, 0.0);
            s.gaussians.push_back(std::move(g));
        }
    s.validate();
    return s;
}

SyntheticBenchmark make_synthetic_benchmark(std::uint64_t seed, int size, int basis_count) {
    if (size < 16) throw std::invalid_argument("benchmark image size must be >= 16");
    constexpr int kGaussians = 5, kFrames = 10;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SyntheticBenchmark bm;
    GaussianScene& s = bm.truth;
    s.timesteps = kFrames;
    s.background = Vec3(0.05, 0.05, 0.08);
    const double focal = static_cast<double>(size);
    for (int t = 0; t < kFrames; ++t) s.cameras.push_back(Camera::pinhole(size, size, focal));

    const Vec3 velocity(0.04, -0.02, 0.01);
    s.bases = MotionBasisSet::identity(basis_count, kFrames);
    for (auto& b : s.bases.bases)
        for (int t = 0; t < kFrames; ++t) b[t].t = velocity * t;

    const std::array<Vec3, kGaussians> colors = {Vec3(0.9, 0.2, 0.2), Vec3(0.2, 0.8, 0.3), Vec3(0.25, 0.35, 0.9),
                                                 Vec3(0.9, 0.8, 0.2), Vec3(0.7, 0.3, 0.8)};
    for (int i = 0; i < kGaussians; ++i) {
        Gaussian3D g;
        const double angle = 2.0 * 3.141592653589793 * i / kGaussians;
        g.mu0 = Vec3(0.7 * std::cos(angle) + 0.1 * uni(rng), 0.7 * std::sin(angle) + 0.1 * uni(rng), 4.0 + 0.4 * uni(rng));
        g.R0 = Quat(exp_so3(Vec3(uni(rng), uni(rng), uni(rng)))).normalized();
        g.scales = Vec3(0.25 + 0.1 * uni(rng), 0.2 + 0.08 * uni(rng), 0.15 + 0.05 * uni(rng));
        g.opacity = 0.85 + 0.1 * uni(rng);
        g.color = colors[i];
        g.motion_logits.resize(basis_count);
        for (auto& l : g.motion_logits) l = 0.5 * gauss(rng);
        s.gaussians.push_back(std::move(g));
    }
    s.validate();

    for (int t = 0; t < kFrames; ++t) {
        const auto r = render(s, t);
        bm.obs.frames.push_back(r.image);
        bm.obs.depths.push_back(surface_depth(r));
    }
    bm.obs.cameras = s.cameras;
    // Tracks from pixels well covered at t = 0 to every later frame.
    const auto r0 = render(s, 0);
    std::vector<Vec2> seeds;
    for (int y = 2; y < size; y += 6)
        for (int x = 2; x < size; x += 6)
            if (r0.opacity[static_cast<std::size_t>(y) * size + x] > 0.5) seeds.emplace_back(x, y);
    for (const auto& p : seeds)
        for (int t2 = 1; t2 < kFrames; ++t2) bm.obs.tracks.push_back({0, t2, p, track_correspondence(s, p, 0, t2).uv});

    const Vec3 center(0.0, 0.0, 4.0);
    for (int t = 0; t < kFrames; ++t) {
        const Mat3 Ry = exp_so3(Vec3(0.0, 0.15, 0.0)) * exp_so3(Vec3(0.05, 0.0, 0.0));
        const Vec3 eye = center - Ry * Vec3(0.0, 0.0, 4.0);
        RigidTransform E{Ry.transpose(), -(Ry.transpose() * eye)};
        bm.heldout.push_back(Camera::pinhole(size, size, focal, E));
    }

    GaussianScene init = s;
    for (auto& g : init.gaussians) {
        for (int k = 0; k < 3; ++k) g.mu0[k] += 0.08 * gauss(rng);
        g.R0 = (Quat(exp_so3(0.15 * Vec3(gauss(rng), gauss(rng), gauss(rng)))) * g.R0).normalized();
        for (int k = 0; k < 3; ++k) g.scales[k] *= std::exp(0.2 * gauss(rng));
        g.opacity = sigmoid(detail::logit(g.opacity) + 0.3 * gauss(rng));
        for (int k = 0; k < 3; ++k) g.color[k] = sigmoid(detail::logit(g.color[k]) + 0.3 * gauss(rng));
        for (auto& l : g.motion_logits) l += 0.5 * gauss(rng);
    }
    for (auto& b : init.bases.bases)
        for (int t = 1; t < kFrames; ++t)
            for (int k = 0; k < 3; ++k) b[t].t[k] += 0.02 * gauss(rng);
    bm.init = std::move(init);
    return bm;
}

SceneEvaluation evaluate_scene(const GaussianScene& fitted, const GaussianScene& truth,
                               const std::vector<Camera>& heldout, double pck_threshold) {
    if (fitted.gaussians.size() != truth.gaussians.size() || fitted.timesteps != truth.timesteps)
        throw std::invalid_argument("evaluate_scene: scenes differ in structure");
    if (heldout.size() != static_cast<std::size_t>(truth.timesteps))
        throw std::invalid_argument("evaluate_scene: need one held-out camera per timestep");
    SceneEvaluation ev;
    metrics::PointSet3D pred, gt;
    for (int t = 0; t < truth.timesteps; ++t) {
        ev.heldout_psnr += metrics::psnr(render(fitted, t, heldout[t]).image, render(truth, t, heldout[t]).image);
        for (std::size_t i = 0; i < truth.gaussians.size(); ++i) {
            const Vec3 a = pose_at_time(fitted.gaussians[i], fitted.bases, t).mu;
            const Vec3 b = pose_at_time(truth.gaussians[i], truth.bases, t).mu;
            pred.push_back({a.x(), a.y(), a.z()});
            gt.push_back({b.x(), b.y(), b.z()});
        }
    }
    ev.heldout_psnr /= truth.timesteps;
    ev.epe = metrics::epe(pred, gt);
    ev.pck = metrics::pck(pred, gt, pck_threshold);
    return ev;
}

}  // namespace ceesim::scene
