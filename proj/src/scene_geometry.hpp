#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/AutoDiff>

#include "ceesim/scene.hpp"

namespace ceesim::scene::detail {

// Local parameters of one Gaussian, all offsets around its current state:
// d_mu0(3), d_rot(3), d_log_scale(3), d_logit_opacity(1), d_logit_color(3),
// d_motion_logits(B). Per basis and timestep: d_t(3), d_rot(3).
inline constexpr int kGaussianFixed = 13;
inline int gaussian_params(int B) { return kGaussianFixed + B; }
inline constexpr int kBasisParams = 6;

inline constexpr double kNearDepth = 1e-6;

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;

inline double val(double x) { return x; }
inline double val(const AD& x) { return x.value(); }

inline double logit(double p) {
    p = std::clamp(p, 1e-9, 1.0 - 1e-9);
    return std::log(p / (1.0 - p));
}

template <class T>
using V3 = Eigen::Matrix<T, 3, 1>;
template <class T>
using M3 = Eigen::Matrix<T, 3, 3>;

// Constant with zero derivatives shaped like `like`.
template <class T>
T lift(double v, const T& like) {
    return like * 0.0 + v;
}

template <class T>
V3<T> lift(const Vec3& v, const T& like) {
    V3<T> out;
    for (int k = 0; k < 3; ++k) out[k] = lift(v[k], like);
    return out;
}

template <class T>
M3<T> lift(const Mat3& m, const T& like) {
    M3<T> out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = lift(m(r, c), like);
    return out;
}

template <class T>
struct Q4 {
    T w, x, y, z;
};

template <class T>
Q4<T> qmul(const Q4<T>& a, const Q4<T>& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

template <class T>
Q4<T> qnormalize(const Q4<T>& q) {
    using std::sqrt;
    const T n = sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Small rotation (1, d/2) normalized; matches exp at d = 0 to first order.
template <class T>
Q4<T> qdelta(const T* d) {
    return qnormalize(Q4<T>{lift(1.0, d[0]), d[0] * 0.5, d[1] * 0.5, d[2] * 0.5});
}

template <class T>
Q4<T> qconst(const Quat& q, const T& like) {
    return {lift(q.w(), like), lift(q.x(), like), lift(q.y(), like), lift(q.z(), like)};
}

template <class T>
M3<T> qmatrix(const Q4<T>& q) {
    M3<T> R;
    R(0, 0) = 1.0 - 2.0 * (q.y * q.y + q.z * q.z);
    R(0, 1) = 2.0 * (q.x * q.y - q.w * q.z);
    R(0, 2) = 2.0 * (q.x * q.z + q.w * q.y);
    R(1, 0) = 2.0 * (q.x * q.y + q.w * q.z);
    R(1, 1) = 1.0 - 2.0 * (q.x * q.x + q.z * q.z);
    R(1, 2) = 2.0 * (q.y * q.z - q.w * q.x);
    R(2, 0) = 2.0 * (q.x * q.z - q.w * q.y);
    R(2, 1) = 2.0 * (q.y * q.z + q.w * q.x);
    R(2, 2) = 1.0 - 2.0 * (q.x * q.x + q.y * q.y);
    return R;
}

template <class T>
T sigmoid(const T& x) {
    using std::exp;
    const T e = exp(-x);
    return 1.0 / (1.0 + e);
}

template <class T>
struct PoseT {
    V3<T> mu;
    M3<T> R;
    std::vector<T> weights;
};

// bp may be null: bases are then constants.
template <class T>
PoseT<T> pose(const Gaussian3D& g, const std::vector<RigidTransform>& bases_t, const T* gp, const T* bp) {
    using std::exp;
    const int B = static_cast<int>(bases_t.size());
    PoseT<T> out;

    std::vector<T> logits(B);
    double top = -1e300;
    for (int b = 0; b < B; ++b) {
        logits[b] = gp[kGaussianFixed + b] + g.motion_logits[b];
        top = std::max(top, val(logits[b]));
    }
    T total = lift(0.0, gp[0]);
    out.weights.resize(B);
    for (int b = 0; b < B; ++b) {
        out.weights[b] = exp(logits[b] - top);
        total += out.weights[b];
    }
    for (auto& w : out.weights) w /= total;

    // Rotations of the bases and sign alignment against the dominant one.
    int ref = 0;
    for (int b = 1; b < B; ++b)
        if (val(out.weights[b]) > val(out.weights[ref])) ref = b;
    const Quat qref(bases_t[ref].R);
    V3<T> mu0;
    for (int k = 0; k < 3; ++k) mu0[k] = gp[k] + g.mu0[k];
    out.mu = lift(Vec3::Zero().eval(), gp[0]);
    const T zero = lift(0.0, gp[0]);
    Q4<T> acc{zero, zero, zero, zero};
    for (int b = 0; b < B; ++b) {
        Quat qb(bases_t[b].R);
        if (qb.coeffs().dot(qref.coeffs()) < 0.0) qb.coeffs() *= -1.0;
        Q4<T> q = qconst<T>(qb, gp[0]);
        V3<T> tb;
        for (int k = 0; k < 3; ++k) tb[k] = lift(bases_t[b].t[k], gp[0]);
        if (bp) {
            q = qmul(qdelta(bp + kBasisParams * b + 3), q);
            for (int k = 0; k < 3; ++k) tb[k] += bp[kBasisParams * b + k];
        }
        const M3<T> Rb = qmatrix(q);
        out.mu += out.weights[b] * (Rb * mu0 + tb);
        acc.w += out.weights[b] * q.w;
        acc.x += out.weights[b] * q.x;
        acc.y += out.weights[b] * q.y;
        acc.z += out.weights[b] * q.z;
    }
    const Q4<T> q0 = qmul(qdelta(gp + 3), qconst<T>(g.R0, gp[0]));
    out.R = qmatrix(qmul(qnormalize(acc), q0));
    return out;
}

template <class T>
struct Splat {
    bool visible = false;
    T u, v, ca, cb, cc, depth, opacity;
    V3<T> color;
    V3<T> mu;
    M3<T> R;
};

template <class T>
Splat<T> splat(const Gaussian3D& g, const std::vector<RigidTransform>& bases_t, const T* gp, const T* bp,
               const Camera& cam) {
    using std::exp;
    const PoseT<T> p = pose(g, bases_t, gp, bp);
    Splat<T> s;
    s.mu = p.mu;
    s.R = p.R;
    s.opacity = sigmoid<T>(gp[9] + logit(g.opacity));
    for (int c = 0; c < 3; ++c) s.color[c] = sigmoid<T>(gp[10 + c] + logit(g.color[c]));

    const M3<T> W = lift(cam.E.R, gp[0]);
    const V3<T> X = W * p.mu + lift(cam.E.t, gp[0]);
    s.depth = X[2];
    if (val(X[2]) <= kNearDepth) return s;
    s.visible = true;

    V3<T> var;
    for (int k = 0; k < 3; ++k) {
        const T sk = exp(gp[6 + k] + std::log(g.scales[k]));
        var[k] = sk * sk;
    }
    const M3<T> RS = p.R * var.asDiagonal();
    const M3<T> cov_cam = W * (RS * p.R.transpose()) * W.transpose();

    const double fx = cam.K(0, 0), skew = cam.K(0, 1), cx = cam.K(0, 2), fy = cam.K(1, 1), cy = cam.K(1, 2);
    const T iz = 1.0 / X[2];
    s.u = fx * X[0] * iz + skew * X[1] * iz + cx;
    s.v = fy * X[1] * iz + cy;
    Eigen::Matrix<T, 2, 3> J;
    J(0, 0) = fx * iz;
    J(0, 1) = skew * iz;
    J(0, 2) = -(fx * X[0] + skew * X[1]) * iz * iz;
    J(1, 0) = lift(0.0, gp[0]);
    J(1, 1) = fy * iz;
    J(1, 2) = -fy * X[1] * iz * iz;
    Eigen::Matrix<T, 2, 2> S = J * cov_cam * J.transpose();
    S(0, 0) += kScreenDilation;
    S(1, 1) += kScreenDilation;
    const T det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
    s.ca = S(1, 1) / det;
    s.cb = -S(0, 1) / det;
    s.cc = S(0, 0) / det;
    return s;
}

// Per-pixel compositing record.
struct Hit {
    int gaussian;
    double alpha;
    double T;  // transmittance in front of this splat
};

inline double splat_alpha(const Splat<double>& s, double px, double py) {
    const double dx = px - s.u, dy = py - s.v;
    const double q = s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy;
    return s.opacity * std::exp(-0.5 * q);
}

inline constexpr double kMinAlpha = 1e-10;

// Screen-space bounding radius beyond which alpha < kMinAlpha.
inline double splat_radius(const Splat<double>& s) {
    const double det = s.ca * s.cc - s.cb * s.cb;
    const double a = s.cc / det, c = s.ca / det, b = -s.cb / det;  // covariance
    const double mid = 0.5 * (a + c);
    const double lmax = mid + std::sqrt(std::max(0.0, mid * mid - (a * c - b * b)));
    const double q = 2.0 * std::log(std::max(s.opacity, kMinAlpha) / kMinAlpha);
    return std::sqrt(std::max(0.0, q) * lmax) + 1.0;
}

struct FrameSplats {
    std::vector<Splat<double>> splats;
    std::vector<int> order;  // visible splats, front to back
};

FrameSplats frame_splats(const GaussianScene& scene, int t, const Camera& cam);

// Hits per pixel in front-to-back order, plus final transmittance.
struct HitBuffer {
    int width = 0, height = 0;
    std::vector<std::vector<Hit>> hits;
    std::vector<double> final_T;
};

HitBuffer composite_hits(const FrameSplats& fs, int width, int height);

}  // namespace ceesim::scene::detail
