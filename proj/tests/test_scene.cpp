#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ceesim/fit.hpp"
#include "ceesim/metrics.hpp"
#include "ceesim/scene.hpp"

using namespace ceesim;
using namespace ceesim::scene;

namespace {

Gaussian3D blob(const Vec3& mu, double scale, double opacity, const Vec3& color, int bases = 1) {
    Gaussian3D g;
    g.mu0 = mu;
    g.scales = Vec3::Constant(scale);
    g.opacity = opacity;
    g.color = color;
    g.motion_logits.assign(bases, 0.0);
    return g;
}

GaussianScene one_frame_scene(int w, int h, double focal, int timesteps = 1, int bases = 1) {
    GaussianScene s;
    s.timesteps = timesteps;
    s.bases = MotionBasisSet::identity(bases, timesteps);
    for (int t = 0; t < timesteps; ++t) s.cameras.push_back(Camera::pinhole(w, h, focal));
    return s;
}

bool orthonormal(const Mat3& R, double tol) {
    return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol && std::abs(R.determinant() - 1.0) < tol;
}

RigidTransform random_rigid(std::mt19937_64& rng, double angle, double shift) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {exp_so3(Vec3(n(rng), n(rng), n(rng)).normalized() * angle), Vec3(n(rng), n(rng), n(rng)) * shift};
}

}  // namespace

TEST_CASE("pose_at_time examples") {
    Gaussian3D g = blob({0.3, -0.2, 4.0}, 0.1, 0.5, {1, 0, 0}, 3);
    g.R0 = Quat(exp_so3(Vec3(0.1, 0.2, -0.3)));
    const auto id = MotionBasisSet::identity(3, 5);
    for (int t = 0; t < 5; ++t) {
        const auto p = pose_at_time(g, id, t);
        CHECK((p.mu - g.mu0).norm() < 1e-12);
        CHECK((p.R - g.R0.toRotationMatrix()).norm() < 1e-12);
    }
    CHECK_THROWS(pose_at_time(g, id, 5));
    CHECK_THROWS(pose_at_time(g, id, -1));

    auto single = MotionBasisSet::identity(1, 2);
    single.bases[0][1].t = Vec3(0.5, -1.0, 2.0);
    Gaussian3D g1 = blob({1, 2, 3}, 0.1, 0.5, {1, 1, 1});
    const auto p1 = pose_at_time(g1, single, 1);
    CHECK((p1.mu - Vec3(1.5, 1.0, 5.0)).norm() < 1e-12);
    CHECK((p1.R - Mat3::Identity()).norm() < 1e-12);

    auto two = MotionBasisSet::identity(2, 2);
    two.bases[0][1].t = Vec3(1, 0, 0);
    two.bases[1][1].t = Vec3(0, 3, 1);
    Gaussian3D g2 = blob({0, 0, 4}, 0.1, 0.5, {1, 1, 1}, 2);
    CHECK((pose_at_time(g2, two, 1).mu - Vec3(0.5, 1.5, 4.5)).norm() < 1e-12);
}

TEST_CASE("blended rotations stay orthonormal") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    auto bases = MotionBasisSet::identity(4, 3);
    for (auto& b : bases.bases)
        for (auto& T : b) T = random_rigid(rng, 1.2, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        Gaussian3D g = blob({n(rng), n(rng), 4.0 + n(rng)}, 0.1, 0.5, {1, 1, 1}, 4);
        for (double& l : g.motion_logits) l = n(rng);
        for (int t = 0; t < 3; ++t) CHECK(orthonormal(pose_at_time(g, bases, t).R, 1e-6));
    }
}

TEST_CASE("project examples") {
    const double f = 80.0;
    const auto cam = Camera::pinhole(64, 48, f);
    const double sigma = 0.05;
    const auto p = project({0, 0, 2.0}, Mat3::Identity() * sigma * sigma, cam);
    CHECK(std::abs(p.mu.x() - 31.5) < 1e-12);
    CHECK(std::abs(p.mu.y() - 23.5) < 1e-12);
    CHECK(p.depth == 2.0);
    const double expect = (f * sigma / 2.0) * (f * sigma / 2.0);
    CHECK(std::abs(p.sigma(0, 0) - expect) < 1e-12);
    CHECK(std::abs(p.sigma(1, 1) - expect) < 1e-12);
    CHECK(std::abs(p.sigma(0, 1)) < 1e-15);

    const auto far = project({0, 0, 4.0}, Mat3::Identity() * sigma * sigma, cam);
    CHECK(std::abs(std::sqrt(far.sigma(0, 0)) - 0.5 * std::sqrt(p.sigma(0, 0))) < 1e-12);

    CHECK_THROWS(project({0, 0, -1.0}, Mat3::Identity(), cam));
    CHECK_THROWS(project({0, 0, 0.0}, Mat3::Identity(), cam));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Matrix3d A;
        for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = n(rng);
        const auto q = project({0.3 * n(rng), 0.3 * n(rng), 3.0 + std::abs(n(rng))}, A * A.transpose(), cam);
        CHECK(std::abs(q.sigma(0, 1) - q.sigma(1, 0)) < 1e-9);
        Eigen::SelfAdjointEigenSolver<Mat2> es(q.sigma);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("render examples") {
    auto s = one_frame_scene(40, 30, 50.0);
    s.background = Vec3(0.2, 0.4, 0.6);
    auto empty = render(s, 0);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) {
            CHECK(empty.image.at(x, y, 0) == 0.2);
            CHECK(empty.image.at(x, y, 2) == 0.6);
            CHECK(empty.depth[y * 40 + x] == 0.0);
        }

    // Single Gaussian at (10.3, 20.6) px.
    auto one = one_frame_scene(40, 30, 50.0);
    const Vec3 mu((10.3 - 19.5) * 4.0 / 50.0, (20.6 - 14.5) * 4.0 / 50.0, 4.0);
    one.gaussians.push_back(blob(mu, 0.1, 0.99, {1, 1, 1}));
    auto r = render(one, 0);
    int bx = 0, by = 0;
    double best = -1.0;
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x)
            if (r.image.at(x, y, 0) > best) {
                best = r.image.at(x, y, 0);
                bx = x;
                by = y;
            }
    CHECK(std::abs(bx - 10.3) <= 1.0);
    CHECK(std::abs(by - 20.6) <= 1.0);

    // 41x31 puts the principal point on pixel (20, 15).
    auto two = one_frame_scene(41, 31, 50.0);
    two.gaussians.push_back(blob({0, 0, 6.0}, 0.5, 0.9, {0, 0, 1}));
    two.gaussians.push_back(blob({0, 0, 3.0}, 0.5, 1.0 - 1e-12, {1, 0, 0}));
    auto front = render(two, 0);
    CHECK(std::abs(front.image.at(20, 15, 0) - 1.0) < 1e-6);
    CHECK(std::abs(front.image.at(20, 15, 2)) < 1e-6);
}

TEST_CASE("single Gaussian renders only blends of its color and the background") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = one_frame_scene(24, 24, 30.0);
        s.background = Vec3(u(rng), u(rng), u(rng));
        const Vec3 c(u(rng), u(rng), u(rng));
        auto g = blob({u(rng) - 0.5, u(rng) - 0.5, 3.0 + u(rng)}, 0.05 + 0.3 * u(rng), 0.05 + 0.9 * u(rng), c);
        g.R0 = Quat(exp_so3(Vec3(u(rng), u(rng), u(rng))));
        g.scales = Vec3(0.05 + 0.3 * u(rng), 0.05 + 0.3 * u(rng), 0.05 + 0.3 * u(rng));
        s.gaussians.push_back(g);
        auto r = render(s, 0);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                const double a = r.opacity[y * 24 + x];
                CHECK(a >= 0.0);
                CHECK(a <= 1.0);
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = r.image.at(x, y, ch);
                    CHECK(std::abs(v - (a * c[ch] + (1.0 - a) * s.background[ch])) < 1e-12);
                    CHECK(v <= std::max(c[ch], s.background[ch]) + 1e-12);
                }
            }
    }
}

TEST_CASE("accumulated opacity stays in [0,1] with many splats") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto s = one_frame_scene(32, 32, 40.0);
    for (int i = 0; i < 60; ++i)
        s.gaussians.push_back(blob({u(rng) - 0.5, u(rng) - 0.5, 2.0 + 3.0 * u(rng)}, 0.05 + 0.2 * u(rng),
                                   0.01 + 0.98 * u(rng), {u(rng), u(rng), u(rng)}));
    auto r = render(s, 0);
    for (double a : r.opacity) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
    for (double v : r.image.samples()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("moving scene and camera together leaves the render unchanged") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto s = one_frame_scene(32, 24, 40.0);
    s.background = Vec3(0.1, 0.2, 0.3);
    for (int i = 0; i < 12; ++i) {
        auto g = blob({u(rng) - 0.5, u(rng) - 0.5, 3.0 + u(rng)}, 0.05 + 0.2 * u(rng), 0.1 + 0.8 * u(rng),
                      {u(rng), u(rng), u(rng)});
        g.R0 = Quat(exp_so3(Vec3(u(rng), u(rng), u(rng))));
        g.scales = Vec3(0.05 + 0.2 * u(rng), 0.05 + 0.1 * u(rng), 0.05 + 0.15 * u(rng));
        s.gaussians.push_back(g);
    }
    const auto base = render(s, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const RigidTransform T = random_rigid(rng, 0.7, 2.0);
        auto moved = s;
        for (auto& g : moved.gaussians) {
            g.mu0 = T.apply(g.mu0);
            g.R0 = Quat(T.R * g.R0.toRotationMatrix());
        }
        moved.cameras[0].E = s.cameras[0].E.compose(T.inverse());
        const auto r = render(moved, 0);
        double worst = 0.0;
        for (std::size_t i = 0; i < r.image.size(); ++i)
            worst = std::max(worst, std::abs(r.image.samples()[i] - base.image.samples()[i]));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("track_correspondence examples") {
    auto s = one_frame_scene(40, 40, 50.0, 3);
    s.gaussians.push_back(blob({0, 0, 4.0}, 0.6, 0.95, {1, 1, 1}));
    const Vec2 p(21.0, 18.0);
    const auto d0 = render(s, 0);
    const double surface = d0.depth[18 * 40 + 21] / d0.opacity[18 * 40 + 21];

    auto same = track_correspondence(s, p, 0, 2);
    CHECK((same.uv - p).norm() < 1e-9);
    CHECK(std::abs(same.depth - surface) < 1e-9);
    auto ident = track_correspondence(s, p, 1, 1);
    CHECK((ident.uv - p).norm() < 1e-9);

    auto moved = s;
    const Vec3 delta(0.2, -0.1, 0.0);
    moved.bases.bases[0][2].t = delta;
    auto tr = track_correspondence(moved, p, 0, 2);
    CHECK(std::abs(tr.uv.x() - (p.x() + 50.0 * delta.x() / surface)) < 1e-6);
    CHECK(std::abs(tr.uv.y() - (p.y() + 50.0 * delta.y() / surface)) < 1e-6);
    CHECK(tr.depth > 0.0);

    auto small = one_frame_scene(40, 40, 50.0, 2);
    small.gaussians.push_back(blob({0, 0, 4.0}, 0.05, 0.95, {1, 1, 1}));
    CHECK_THROWS(track_correspondence(small, Vec2(0.0, 0.0), 0, 1));
}

TEST_CASE("scene file round trip") {
    auto bm = make_synthetic_benchmark(5, 32, 3);
    const auto path = std::filesystem::temp_directory_path() / "ceesim_scene_roundtrip.json";
    save_scene(bm.truth, path);
    const auto back = load_scene(path);
    std::filesystem::remove(path);
    REQUIRE(back.gaussians.size() == bm.truth.gaussians.size());
    CHECK(back.timesteps == bm.truth.timesteps);
    for (int t = 0; t < back.timesteps; ++t) {
        const auto a = render(bm.truth, t), b = render(back, t);
        CHECK(metrics::mse(a.image, b.image) < 1e-20);
    }
    CHECK_THROWS(load_scene(std::filesystem::temp_directory_path() / "ceesim_missing_scene.json"));
}

TEST_CASE("validate rejects inconsistent scenes") {
    auto s = one_frame_scene(16, 16, 20.0, 2);
    s.gaussians.push_back(blob({0, 0, 3}, 0.2, 0.5, {1, 1, 1}));
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    bad.gaussians[0].opacity = 1.0;
    CHECK_THROWS(bad.validate());
    bad = s;
    bad.gaussians[0].scales.x() = 0.0;
    CHECK_THROWS(bad.validate());
    bad = s;
    bad.cameras.pop_back();
    CHECK_THROWS(bad.validate());
    bad = s;
    bad.gaussians[0].motion_logits.push_back(0.0);
    CHECK_THROWS(bad.validate());
}

TEST_CASE("analytic gradient matches central differences on a two-Gaussian scene") {
    auto bm = make_synthetic_benchmark(7, 24, 2);
    auto scene = bm.init;
    scene.gaussians.resize(2);
    FitConfig cfg;
    cfg.basis_count = 2;
    const auto lg = loss_gradient(scene, bm.obs, cfg);
    const int n = parameter_count(scene);
    REQUIRE(lg.gradient.size() == n);
    const double h = 1e-6;
    int checked = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = h;
        const double up = scene_loss(retract(scene, e), bm.obs, cfg).total;
        const double dn = scene_loss(retract(scene, -e), bm.obs, cfg).total;
        const double fd = (up - dn) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(lg.gradient[i]), 1e-4});
        if (std::abs(fd - lg.gradient[i]) / scale >= 1e-3)
            MESSAGE("parameter " << i << ": analytic " << lg.gradient[i] << " fd " << fd);
        CHECK(std::abs(fd - lg.gradient[i]) / scale < 1e-3);
        ++checked;
    }
    CHECK(checked == n);
}

TEST_CASE("fit at the ground truth is a fixed point") {
    auto bm = make_synthetic_benchmark(5, 32, 3);
    FitConfig cfg;
    cfg.basis_count = 3;
    cfg.iterations = 5;
    const auto lg = loss_gradient(bm.truth, bm.obs, cfg);
    CHECK(lg.loss.image < 1e-9);
    CHECK(lg.gradient.cwiseAbs().maxCoeff() < 1e-6);
    const auto fit = fit_scene(bm.obs, bm.truth, cfg);
    CHECK(std::abs(fit.report.final.total - fit.report.initial.total) <= 1e-9);
}

TEST_CASE("synthetic benchmark fit") {
    auto bm = make_synthetic_benchmark();
    const auto fit = fit_scene(bm.obs, bm.init);
    const auto& h = fit.report.history;
    REQUIRE(h.size() >= 2);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
    CHECK(fit.report.final.total < fit.report.initial.total);
    const auto ev = evaluate_scene(fit.scene, bm.truth, bm.heldout);
    CHECK(ev.heldout_psnr >= 30.0);
}

TEST_CASE("fit_scene input errors") {
    auto bm = make_synthetic_benchmark(5, 24, 2);
    FitConfig cfg;
    cfg.basis_count = 2;
    auto one = bm.obs;
    one.frames.resize(1);
    one.cameras.resize(1);
    CHECK_THROWS(fit_scene(one, bm.init, cfg));

    auto nan_scene = bm.init;
    nan_scene.gaussians[0].color = Vec3::Constant(std::nan(""));
    CHECK_THROWS_AS(fit_scene(bm.obs, nan_scene, cfg), std::runtime_error);
}

TEST_CASE("initialization from frames") {
    auto bm = make_synthetic_benchmark(5, 32, 2);
    auto s = initialize_from_frames(bm.obs, 6, 4.0, 2);
    CHECK(s.gaussians.size() == 36);
    CHECK_NOTHROW(s.validate());
    for (std::size_t i = 0; i < s.gaussians.size(); ++i)
        for (std::size_t j = i + 1; j < s.gaussians.size(); ++j) CHECK(s.gaussians[i].mu0.z() != s.gaussians[j].mu0.z());
}
