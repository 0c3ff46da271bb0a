#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "ceesim/video.hpp"

namespace ceesim::scene {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

struct RigidTransform {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 apply(const Vec3& x) const { return R * x + t; }
    RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
    /// (*this) after `other`.
    RigidTransform compose(const RigidTransform& other) const { return {R * other.R, R * other.t + t}; }
};

/// Rotation by the axis-angle vector w.
Mat3 exp_so3(const Vec3& w);

struct Gaussian3D {
    Vec3 mu0 = Vec3::Zero();
    Quat R0 = Quat::Identity();
    Vec3 scales = Vec3::Ones();
    double opacity = 0.5;
    Vec3 color = Vec3::Constant(0.5);
    /// Unnormalized motion coefficients; blend weights are their softmax.
    std::vector<double> motion_logits;

    std::vector<double> motion_weights() const;
    /// R0 diag(scales^2) R0^T.
    Mat3 covariance() const;
};

/// bases[b][t] maps canonical coordinates to time t.
struct MotionBasisSet {
    std::vector<std::vector<RigidTransform>> bases;

    int count() const { return static_cast<int>(bases.size()); }
    int timesteps() const { return bases.empty() ? 0 : static_cast<int>(bases.front().size()); }
    static MotionBasisSet identity(int count, int timesteps);
};

struct Camera {
    int width = 0;
    int height = 0;
    Mat3 K = Mat3::Identity();
    /// World to camera.
    RigidTransform E;

    /// Square pixels, principal point at the image center ((w-1)/2, (h-1)/2).
    static Camera pinhole(int width, int height, double focal, const RigidTransform& E = {});
};

struct GaussianScene {
    std::vector<Gaussian3D> gaussians;
    MotionBasisSet bases;
    std::vector<Camera> cameras;
    int timesteps = 0;
    Vec3 background = Vec3::Zero();

    /// Throws std::invalid_argument on inconsistent sizes or invalid values.
    void validate() const;
};

struct Pose {
    Vec3 mu;
    Mat3 R;
};

/// mu_t = sum_b w_b (R_b mu0 + t_b); R_t = normalized weighted quaternion
/// average of the R_b, times R0.
Pose pose_at_time(const Gaussian3D& g, const MotionBasisSet& bases, int t);

/// Added to the projected covariance before inversion (px^2).
inline constexpr double kScreenDilation = 0.3;

struct Projection {
    Vec2 mu;
    Mat2 sigma;
    double depth = 0.0;
};

/// Pinhole projection of a 3D Gaussian. Throws if the point is not in front
/// of the camera.
Projection project(const Vec3& mu, const Mat3& sigma, const Camera& cam);

struct RenderOutput {
    Frame image;
    /// Sum of T_i alpha_i d_i; 0 where nothing is hit.
    std::vector<double> depth;
    /// Accumulated opacity 1 - prod(1 - alpha_i).
    std::vector<double> opacity;
};

/// Front-to-back splatting of every Gaussian at time t, seen by the scene
/// camera of that timestep or by `cam`.
RenderOutput render(const GaussianScene& scene, int t);
RenderOutput render(const GaussianScene& scene, int t, const Camera& cam);

struct TrackResult {
    Vec2 uv;
    double depth = 0.0;
};

/// Lifts pixel p at time t to the rendered surface point, carries it to t'
/// with the blended per-Gaussian rigid motions and projects it with the
/// camera of t'. Throws if the pixel is not covered at time t.
TrackResult track_correspondence(const GaussianScene& scene, const Vec2& p, int t, int t_prime);

/// JSON scene file: timesteps, background, gaussians (mu0, rotation as
/// [w,x,y,z], scales, opacity, color, motion_logits), bases ([basis][t] of
/// {R: row-major 9, t: 3}), cameras ({width, height, K: row-major 9, R, t}).
void save_scene(const GaussianScene& scene, const std::filesystem::path& path);
GaussianScene load_scene(const std::filesystem::path& path);

}  // namespace ceesim::scene
