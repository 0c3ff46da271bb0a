#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ceesim/scene.hpp"
#include "ceesim/video.hpp"

namespace ceesim::scene {

/// 2D correspondence: pixel p at time t is seen at `target` at time t_prime.
struct Track2D {
    int t = 0;
    int t_prime = 0;
    Vec2 p;
    Vec2 target;
};

struct Observations {
    std::vector<Frame> frames;
    /// Per-frame surface depth maps, row-major; values <= 0 mark pixels
    /// without a measurement. Empty: no depth term. The depth penalty at a
    /// pixel is applied to sum T_i alpha_i (d_i - observed).
    std::vector<std::vector<double>> depths;
    std::vector<Track2D> tracks;
    std::vector<Camera> cameras;
};

/// Normalized rendered depth (depth / opacity) where the accumulated
/// opacity exceeds `min_opacity`, 0 elsewhere.
std::vector<double> surface_depth(const RenderOutput& r, double min_opacity = 1e-3);

struct FitConfig {
    int iterations = 300;
    double lr_position = 1e-2;
    double lr_rotation = 1e-2;
    double lr_scale = 1e-2;
    double lr_opacity = 5e-2;
    double lr_color = 5e-2;
    double lr_motion = 1e-2;
    double lr_basis_translation = 5e-3;
    double lr_basis_rotation = 5e-3;
    double weight_image = 1.0;
    double weight_depth = 0.1;
    double weight_track = 1e-3;
    /// Smoothing of the L1 penalties: sqrt(r^2 + eps^2) - eps.
    double charbonnier_eps = 1e-3;
    int basis_count = 20;
    bool optimize_bases = true;
    /// Fitting stops once the step scale has been halved below this.
    double min_step_scale = 1e-4;
};

struct LossTerms {
    double image = 0.0;
    double depth = 0.0;
    double track = 0.0;
    double total = 0.0;
};

/// Flat parameter vector: per Gaussian d_mu0(3), d_rot(3), d_log_scale(3),
/// d_logit_opacity, d_logit_color(3), d_motion_logits(B); then per basis
/// and timestep t >= 1: d_translation(3), d_rot(3). Offsets are taken around
/// the current scene, so the gradient is evaluated at zero.
int parameter_count(const GaussianScene& scene, bool with_bases = true);

/// Applies a step in that parametrization (rotations by left-multiplied
/// exponential maps).
GaussianScene retract(const GaussianScene& scene, const Eigen::VectorXd& step, bool with_bases = true);

LossTerms scene_loss(const GaussianScene& scene, const Observations& obs, const FitConfig& cfg = {});

struct LossGradient {
    LossTerms loss;
    Eigen::VectorXd gradient;
};

LossGradient loss_gradient(const GaussianScene& scene, const Observations& obs, const FitConfig& cfg = {});

struct FitReport {
    /// Total loss after every accepted step, starting with the initial loss.
    std::vector<double> history;
    int accepted = 0;
    int rejected = 0;
    LossTerms initial;
    LossTerms final;
};

struct FitResult {
    GaussianScene scene;
    FitReport report;
};

/// Adam with per-group step sizes; a step that raises the loss is rejected
/// and the step scale halved. Throws std::runtime_error if the loss
/// becomes non-finite.
FitResult fit_scene(const Observations& obs, const GaussianScene& init, const FitConfig& cfg = {});

/// Grid of small Gaussians lifted from the first frame at a constant depth
/// (staggered by about 1% so that no two share a depth),
/// static identity bases, cameras from the observations.
GaussianScene initialize_from_frames(const Observations& obs, int grid, double depth, int basis_count);

struct SyntheticBenchmark {
    GaussianScene truth;
    GaussianScene init;
    Observations obs;
    /// Novel viewpoint per timestep, not used for fitting.
    std::vector<Camera> heldout;
};

/// Five Gaussians over ten frames; every basis follows the same rigid
/// translation. Observations are rendered from the ground truth, the
/// initialization is a seeded perturbation of it.
SyntheticBenchmark make_synthetic_benchmark(std::uint64_t seed = 5, int size = 64, int basis_count = 20);

struct SceneEvaluation {
    double heldout_psnr = 0.0;
    double epe = 0.0;
    double pck = 0.0;
};

/// Held-out PSNR is averaged over timesteps; EPE and PCK compare Gaussian
/// centers at every timestep.
SceneEvaluation evaluate_scene(const GaussianScene& fitted, const GaussianScene& truth,
                               const std::vector<Camera>& heldout, double pck_threshold = 0.1);

}  // namespace ceesim::scene
