// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ceesim/channel.hpp"
#include "ceesim/classical.hpp"
#include "ceesim/config.hpp"
#include "ceesim/fit.hpp"
#include "ceesim/ldpc.hpp"
#include "ceesim/metrics.hpp"
#include "ceesim/pipeline.hpp"
#include "ceesim/scene.hpp"
#include "ceesim/semantic.hpp"

using namespace ceesim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome delay_reduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const config::RunConfig cfg;
    const auto rep = pipeline::compare_baselines(pipeline::load_inputs(cfg), cfg);
    const double secs = seconds_since(t0);
    return {rep.reduction_percent >= 90.0 && rep.reduction_percent <= 99.0 && secs < 60.0,
            fmt("reduction %.2f%% (semantic %.2f s, classical %.2f s), runtime %.1f s", rep.reduction_percent,
                rep.semantic_delay_seconds, rep.classical_delay_seconds, secs)};
}

Outcome low_snr_ordering() {
    const config::RunConfig cfg;
    const auto in = pipeline::load_inputs(cfg);
    const auto sem = pipeline::transmit(in.user, pipeline::Chain::Semantic, 0.0, cfg);
    const auto cls = pipeline::transmit(in.user, pipeline::Chain::Classical, 0.0, cfg);
    const bool big_enough = in.user.width() >= 64 && in.user.height() >= 64 && in.user.size() >= 8;
    return {big_enough && sem.psnr > cls.psnr,
            fmt("%dx%d, %zu frames: semantic %.2f dB, classical %.2f dB", in.user.width(), in.user.height(),
                in.user.size(), sem.psnr, cls.psnr)};
}

Outcome graceful_degradation() {
    const auto t0 = std::chrono::steady_clock::now();
    const config::RunConfig cfg;
    const auto in = pipeline::load_inputs(cfg);
    std::vector<double> snrs;
    for (double s = -10.0; s <= 25.0; s += 5.0) snrs.push_back(s);
    const auto curves = pipeline::snr_sweep(in.user, cfg, snrs);
    const double sem_drop = pipeline::max_adjacent_drop(curves.psnr(pipeline::Chain::Semantic));
    const double cls_drop = pipeline::max_adjacent_drop(curves.psnr(pipeline::Chain::Classical));
    const double secs = seconds_since(t0);
    return {sem_drop < cls_drop && cls_drop > 10.0 && secs < 600.0,
            fmt("max 5 dB-step drop: semantic %.2f dB, classical %.2f dB, runtime %.1f s", sem_drop, cls_drop, secs)};
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

Outcome ldpc_gain() {
    const double snr_db = 3.0;
    const auto code = ldpc::LdpcCode::build({});
    const channel::ChannelConfig ch{snr_db, channel::ChannelKind::Awgn, 2024};
    const double nv = ch.noise_variance();
    std::mt19937_64 rng(77);
    std::bernoulli_distribution coin(0.5);

    // Uncoded BPSK against the closed form first.
    const std::size_t uncoded_bits = 1'000'000;
    std::vector<std::uint8_t> bits(uncoded_bits);
    for (auto& b : bits) b = coin(rng);
    const auto rx = channel::awgn(classical::bpsk_modulate(bits), ch, 1);
    const auto hard = classical::hard_decision(classical::bpsk_demodulate(rx.symbols, nv));
    std::size_t uerr = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) uerr += hard[i] != bits[i];
    const double uncoded = static_cast<double>(uerr) / uncoded_bits;
    // Per-symbol SNR gamma = Es/N0 with N0 = 2 * noise variance.
    const double gamma = 1.0 / (2.0 * nv);
    const double closed = q_function(std::sqrt(2.0 * gamma));
    const bool oracle_ok = std::abs(uncoded - closed) <= 0.05 * closed;

    const std::size_t blocks = (1'000'000 + code.k() - 1) / code.k();
    std::size_t cerr = 0, total = 0;
    const std::size_t batch = 64;
    for (std::size_t b0 = 0; b0 < blocks; b0 += batch) {
        const std::size_t nb = std::min(batch, blocks - b0);
        std::vector<std::uint8_t> info(nb * code.k());
        for (auto& b : info) b = coin(rng);
        const auto enc = ldpc::ldpc_encode(info, code);
        const auto y = channel::awgn(classical::bpsk_modulate(enc.bits), ch, 100 + b0);
        const auto dec = ldpc::ldpc_decode(classical::bpsk_demodulate(y.symbols, nv), code);
        for (std::size_t i = 0; i < info.size(); ++i) cerr += dec.bits[i] != info[i];
        total += info.size();
    }
    const double coded = static_cast<double>(cerr) / static_cast<double>(total);
    return {oracle_ok && total >= 1'000'000 && coded * 10.0 <= uncoded,
            fmt("uncoded %.4e (closed form %.4e), decoded %.3e over %zu info bits", uncoded, closed, coded, total)};
}

Outcome metric_examples() {
    using namespace metrics;
    int failed = 0, checked = 0;
    auto expect = [&](bool ok) {
        ++checked;
        failed += !ok;
    };
    Frame zero(16, 16, 0.0), one(16, 16, 1.0), half(16, 16, 0.5);
    Frame noise(16, 16);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : noise.samples()) v = u(rng);
    expect(mse(noise, noise) == 0.0);
    expect(std::abs(mse(zero, one) - 1.0) <= 1e-9);
    expect(std::abs(mse(zero, half) - 0.25) <= 1e-9);
    expect(std::abs(psnr_from_mse(0.01) - 20.0) <= 1e-9);
    expect(psnr(noise, noise) == kPsnrCapDb);
    expect(std::abs(psnr(zero, one)) <= 1e-9);

    Frame big(176, 176), other(176, 176);
    for (int y = 0; y < 176; ++y)
        for (int x = 0; x < 176; ++x)
            for (int c = 0; c < 3; ++c) {
                big.at(x, y, c) = 0.5 + 0.4 * std::sin(0.11 * x + 0.07 * y + c);
                other.at(x, y, c) = 0.5 + 0.4 * std::sin(0.09 * x - 0.05 * y + 2 * c);
            }
    expect(std::abs(ms_ssim(big, big) - 1.0) <= 1e-6);
    expect(std::abs(ms_ssim(big, other) - ms_ssim(other, big)) <= 1e-6);

    const PointSet3D pts = {{0, 0, 0}, {1, 2, 3}, {-1, 0.5, 2}};
    PointSet3D shifted = pts;
    for (auto& p : shifted) p.x += 0.03;
    expect(epe(pts, pts) == 0.0);
    expect(std::abs(epe(shifted, pts) - 0.03) <= 1e-9);
    expect(std::abs(epe({{0.1, 0, 0}, {0, 0.3, 0}}, {{0, 0, 0}, {0, 0, 0}}) - 0.2) <= 1e-9);

    PointSet3D off = pts;
    for (auto& p : off) p.z += 0.07;
    expect(pck(pts, pts, 0.01) == 1.0);
    expect(pck(off, pts, 0.05) == 0.0);
    expect(pck(off, pts, 0.10) == 1.0);
    expect(std::abs(pck({{0, 0, 0}, {1, 0, 0}}, {{0, 0, 0}, {0, 0, 0}}, 0.5) - 0.5) <= 1e-9);

    const BoxSet box = {{0, 0, 1, 1}};
    expect(average_jaccard(box, box) == 1.0);
    expect(average_jaccard({{2, 2, 3, 3}}, box) == 0.0);
    expect(std::abs(average_jaccard({{0.5, 0, 1.5, 1}}, box) - 1.0 / 3.0) <= 1e-9);
    return {failed == 0, fmt("%d of %d examples exact", checked - failed, checked)};
}

Outcome cfe_identity() {
    std::mt19937_64 rng(1000);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 8);
    int exact = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Frame> frames;
        const int g = len(rng);
        for (int f = 0; f < g; ++f) {
            Frame fr(12, 12);
            for (double& v : fr.samples()) v = quantize8(std::clamp(0.5 + 0.25 * n(rng), 0.0, 1.0));
            frames.push_back(fr);
        }
        const auto y = semantic::jscc_encode(semantic::latent_transform(Gop(frames)));
        exact += semantic::combine_common(semantic::extract_common(y)).data == y.data;
    }
    return {exact == 1000, fmt("%d of 1000 random GOPs reconstructed bit-exactly", exact)};
}

Outcome renderer_checks() {
    using namespace scene;
    // Argmax pixel of a single Gaussian.
    GaussianScene s;
    s.timesteps = 1;
    s.bases = MotionBasisSet::identity(1, 1);
    s.cameras = {Camera::pinhole(48, 40, 60.0)};
    Gaussian3D g;
    const double px = 13.4, py = 27.8, z = 3.0;
    g.mu0 = Vec3((px - 23.5) * z / 60.0, (py - 19.5) * z / 60.0, z);
    g.scales = Vec3::Constant(0.06);
    g.opacity = 0.99;
    g.color = Vec3::Ones();
    g.motion_logits = {0.0};
    s.gaussians = {g};
    const auto r = render(s, 0);
    int bx = 0, by = 0;
    double best = -1.0;
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 48; ++x)
            if (r.image.at(x, y, 0) > best) {
                best = r.image.at(x, y, 0);
                bx = x;
                by = y;
            }
    const bool argmax_ok = std::abs(bx - px) <= 1.0 && std::abs(by - py) <= 1.0;

    // Rigid equivalence.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GaussianScene many = s;
    many.gaussians.clear();
    many.background = Vec3(0.2, 0.3, 0.1);
    for (int i = 0; i < 10; ++i) {
        Gaussian3D h;
        h.mu0 = Vec3(u(rng) - 0.5, u(rng) - 0.5, 2.5 + u(rng));
        h.R0 = Quat(exp_so3(Vec3(u(rng), u(rng), u(rng))));
        h.scales = Vec3(0.05 + 0.2 * u(rng), 0.05 + 0.2 * u(rng), 0.05 + 0.2 * u(rng));
        h.opacity = 0.1 + 0.8 * u(rng);
        h.color = Vec3(u(rng), u(rng), u(rng));
        h.motion_logits = {0.0};
        many.gaussians.push_back(h);
    }
    const RigidTransform T{exp_so3(Vec3(0.3, -0.5, 0.2)), Vec3(1.0, -2.0, 0.5)};
    GaussianScene moved = many;
    for (auto& h : moved.gaussians) {
        h.mu0 = T.apply(h.mu0);
        h.R0 = Quat(T.R * h.R0.toRotationMatrix());
    }
    moved.cameras[0].E = many.cameras[0].E.compose(T.inverse());
    const auto a = render(many, 0), b = render(moved, 0);
    double rigid_err = 0.0;
    for (std::size_t i = 0; i < a.image.size(); ++i)
        rigid_err = std::max(rigid_err, std::abs(a.image.samples()[i] - b.image.samples()[i]));

    // Gradient against central differences on two Gaussians.
    auto bm = make_synthetic_benchmark(7, 24, 2);
    auto two = bm.init;
    two.gaussians.resize(2);
    FitConfig cfg;
    cfg.basis_count = 2;
    const auto lg = loss_gradient(two, bm.obs, cfg);
    const int n = parameter_count(two);
    double worst = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = h;
        const double fd = (scene_loss(retract(two, e), bm.obs, cfg).total - scene_loss(retract(two, -e), bm.obs, cfg).total) /
                          (2.0 * h);
        worst = std::max(worst, std::abs(fd - lg.gradient[i]) / std::max({std::abs(fd), std::abs(lg.gradient[i]), 1e-4}));
    }
    return {argmax_ok && rigid_err <= 1e-6 && worst < 1e-3,
            fmt("argmax (%d,%d) vs (%.1f,%.1f); rigid max diff %.2e; gradient rel err %.2e over %d params", bx, by, px,
                py, rigid_err, worst, n)};
}

Outcome desk_fit() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto bm = scene::make_synthetic_benchmark();
    const auto fit = scene::fit_scene(bm.obs, bm.init);
    const auto ev = scene::evaluate_scene(fit.scene, bm.truth, bm.heldout, 0.1);
    const double secs = seconds_since(t0);
    return {ev.heldout_psnr >= 30.0 && ev.epe <= 0.05 && ev.pck == 1.0 && secs < 300.0,
            fmt("held-out %.2f dB, EPE %.4f, PCK(0.1) %.3f, runtime %.1f s", ev.heldout_psnr, ev.epe, ev.pck, secs)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome pipeline_determinism() {
    const fs::path root = fs::temp_directory_path() / "ceesim_acceptance";
    fs::remove_all(root);
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = root / ("run" + std::to_string(run));
        const std::string cmd = std::string("\"") + CEESIM_CLI + "\" pipeline --seed 7 --out \"" + dir.string() +
                                "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
        fs::create_directories(root);
        const int rc = std::system(cmd.c_str());
        if (rc != 0) return {false, fmt("pipeline run %d exited with %d", run, rc)};
        reports[run] = slurp(dir / "service_report.json");
    }
    const bool same = !reports[0].empty() && reports[0] == reports[1];
    fs::remove_all(root);
    return {same, fmt("two reports of %zu and %zu bytes %s", reports[0].size(), reports[1].size(),
                      same ? "identical" : "differ")};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"delay reduction in [90%, 99%]", delay_reduction},
        {"semantic beats classical at 0 dB", low_snr_ordering},
        {"graceful degradation vs classical cliff", graceful_degradation},
        {"LDPC gain at 3 dB >= 10x", ldpc_gain},
        {"metric examples", metric_examples},
        {"common feature identity on 1000 GOPs", cfe_identity},
        {"renderer correctness", renderer_checks},
        {"synthetic scene fit", desk_fit},
        {"pipeline determinism", pipeline_determinism},
    };
    int failures = 0, index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failures, index);
    return failures == 0 ? 0 : 1;
}
