#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ceesim/config.hpp"
#include "ceesim/pipeline.hpp"

using namespace ceesim;
using namespace ceesim::pipeline;
using config::LinkKind;
using config::NodeRole;

namespace {

config::RunConfig small_config() {
    config::RunConfig cfg;
    cfg.fixture.width = 64;
    cfg.fixture.height = 64;
    cfg.vsr.grid = 4;
    cfg.vsr.downsample = 2;
    cfg.vsr.fit.iterations = 4;
    cfg.vsr.fit.basis_count = 2;
    return cfg;
}

double stage_sum(const ServiceReport& r, bool (*pick)(const StageReport&), double StageReport::*field) {
    double acc = 0.0;
    for (const auto& s : r.stages)
        if (pick(s)) acc += s.*field;
    return acc;
}

}  // namespace

TEST_CASE("stage_latency examples") {
    const NodeSpec idle{NodeRole::End, 1.0};
    CHECK(stage_latency(8e6, {NodeRole::End, NodeRole::Edge, 1e6, LinkKind::Wireless}, 0.0, idle) == 8.0);
    CHECK(stage_latency(0.0, {NodeRole::End, NodeRole::Edge, 1e6, LinkKind::Wireless}, 10e12,
                        {NodeRole::Edge, 10e12}) == 1.0);

    // 11.5 MB of classical payload over the reference wireless link.
    const config::RunConfig ref;
    CHECK(ref.uplink.throughput == doctest::Approx(16089.542).epsilon(1e-6));
    CHECK(stage_latency(11.5e6 * 8.0, ref.downlink, 0.0, idle) == doctest::Approx(5718.0).epsilon(1e-12));

    CHECK_THROWS(stage_latency(1.0, {NodeRole::End, NodeRole::Edge, 0.0, LinkKind::Wireless}, 0.0, idle));
    CHECK_THROWS(stage_latency(1.0, {NodeRole::End, NodeRole::Edge, 1.0, LinkKind::Wireless}, 0.0, {NodeRole::End, 0.0}));
    CHECK_THROWS(stage_latency(-1.0, {NodeRole::End, NodeRole::Edge, 1.0, LinkKind::Wireless}, 0.0, idle));
}

TEST_CASE("wireless delay is linear in payload") {
    const config::RunConfig ref;
    const NodeSpec idle{NodeRole::End, 1.0};
    const double one = stage_latency(1e6, ref.uplink, 0.0, idle);
    for (double k : {2.0, 3.5, 10.0, 1234.0}) CHECK(stage_latency(k * 1e6, ref.uplink, 0.0, idle) == doctest::Approx(k * one));
}

TEST_CASE("service flow on a small fixture") {
    const auto cfg = small_config();
    const auto in = load_inputs(cfg);
    const auto out = run_service(in, cfg);
    const auto& r = out.report;
    CHECK(r.completed);
    REQUIRE(r.stages.size() == stage_names().size());
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        CHECK(r.stages[i].name == stage_names()[i]);
        CHECK(r.stages[i].status == StageStatus::Ok);
        CHECK(r.stages[i].delay_seconds >= 0.0);
    }
    double total = 0.0;
    for (const auto& s : r.stages) total += s.delay_seconds;
    CHECK(r.total_delay_seconds == total);
    CHECK(r.wireless_delay_seconds ==
          stage_sum(r, [](const StageReport& s) { return s.wireless; }, &StageReport::transmission_seconds));
    CHECK(r.fiber_delay_seconds ==
          stage_sum(r, [](const StageReport& s) { return !s.wireless; }, &StageReport::transmission_seconds));
    CHECK(r.compute_delay_seconds ==
          stage_sum(r, [](const StageReport&) { return true; }, &StageReport::compute_seconds));

    CHECK(r.stage("vs_compute").has_metric("matte_iou"));
    CHECK(r.stage("vsr_preprocess").has_metric("fit_psnr"));
    CHECK(r.stage("upload_user_video").wireless);
    CHECK_FALSE(r.stage("edge_to_cloud").wireless);
    CHECK(r.stage("vsr_preprocess").compute_seconds == doctest::Approx(cfg.compute.vsr_preprocess / cfg.cloud.compute_capacity));
    CHECK(out.rendered.has_value());
    CHECK(out.scene.has_value());
    CHECK(out.delivered.size() == in.user.size());
    CHECK_THROWS(r.stage("no_such_stage"));
}

TEST_CASE("identical configs give byte-identical reports") {
    const auto cfg = small_config();
    const auto in = load_inputs(cfg);
    const auto a = run_service(in, cfg).report.to_text();
    const auto b = run_service(in, cfg).report.to_text();
    CHECK(a == b);
    auto other = cfg;
    other.seed = 2;
    CHECK(run_service(in, other).report.to_text() != a);
}

TEST_CASE("disabling scene reconstruction") {
    auto cfg = small_config();
    cfg.vsr.enabled = false;
    const auto out = run_service(load_inputs(cfg), cfg);
    CHECK(out.report.completed);
    CHECK(out.report.stage("vs_compute").status == StageStatus::Ok);
    CHECK(out.report.stage("vsr_preprocess").status == StageStatus::Skipped);
    CHECK(out.report.stage("edge_render").status == StageStatus::Skipped);
    CHECK(out.report.stage("vsr_preprocess").metrics.empty());
    CHECK(out.report.stage("download_3d_video").status == StageStatus::Ok);
    CHECK_FALSE(out.rendered.has_value());
}

TEST_CASE("a failing stage aborts everything downstream") {
    auto cfg = small_config();
    auto in = load_inputs(cfg);
    in.clean_plate = Frame(32, 32);
    const auto out = run_service(in, cfg);
    const auto& r = out.report;
    CHECK_FALSE(r.completed);
    CHECK(r.stage("upload_user_video").status == StageStatus::Ok);
    CHECK(r.stage("vs_compute").status == StageStatus::Failed);
    CHECK_FALSE(r.stage("vs_compute").error.empty());
    for (const char* name : {"vsr_preprocess", "edge_render", "download_3d_video"})
        CHECK(r.stage(name).status == StageStatus::Aborted);
    double total = 0.0;
    for (const auto& s : r.stages) total += s.delay_seconds;
    CHECK(r.total_delay_seconds == total);
}

TEST_CASE("channel-free service composite matches the local composite") {
    config::RunConfig cfg;
    cfg.snr_db = kChannelFreeSnrDb;
    cfg.budget = {config::BudgetMode::Fraction, 1.0};
    cfg.vsr.enabled = false;
    const auto out = run_service(load_inputs(cfg), cfg);
    CHECK(out.report.stage("vs_compute").metric("composite_psnr_vs_local") >= 40.0);
}

TEST_CASE("semantic budget modes") {
    config::RunConfig cfg;
    const auto in = load_inputs(cfg);
    const Gop g = segment_gops(in.user, cfg.gop_size).front();
    const auto total = semantic::element_count(g, cfg.semantic);
    cfg.budget = {config::BudgetMode::Fraction, 1.0};
    CHECK(semantic_budget(g, cfg) == total);
    cfg.budget = {config::BudgetMode::Fraction, 0.25};
    CHECK(semantic_budget(g, cfg) == static_cast<std::size_t>(std::llround(0.25 * total)));
    cfg.budget = {config::BudgetMode::Symbols, 777};
    CHECK(semantic_budget(g, cfg) == 777);
    cfg.budget = {};
    const auto k = semantic_budget(g, cfg);
    const auto run = semantic::semantic_transmit(g, {0.0, channel::ChannelKind::Awgn, 1}, k, cfg.semantic);
    CHECK(run.stats.payload_bits <= classical_payload_bits(g, cfg) / cfg.budget.value);
}

TEST_CASE("snr sweep shape, determinism and csv") {
    const auto cfg = small_config();
    const auto in = load_inputs(cfg);
    const std::vector<double> snrs = {-10, -5, 0, 5, 10, 15, 20, 25};
    const auto a = snr_sweep(in.user, cfg, snrs);
    CHECK(a.rows.size() == 16);
    CHECK(a.psnr(Chain::Semantic).size() == 8);
    CHECK(a.psnr(Chain::Classical).size() == 8);
    CHECK(a.ms_ssim(Chain::Semantic).size() == 8);
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        CHECK(a.rows[2 * i].chain == Chain::Semantic);
        CHECK(a.rows[2 * i + 1].chain == Chain::Classical);
        CHECK(a.rows[2 * i].snr_db == snrs[i]);
    }
    const auto csv = a.to_csv();
    CHECK(csv.rfind("snr_db,chain,psnr,ms_ssim\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
    CHECK(snr_sweep(in.user, cfg, snrs).to_csv() == csv);
    CHECK_THROWS(snr_sweep(in.user, cfg, {}));
}

TEST_CASE("max_adjacent_drop") {
    CHECK(max_adjacent_drop({}) == 0.0);
    CHECK(max_adjacent_drop({3, 2, 1}) == 0.0);
    CHECK(max_adjacent_drop({1, 2, 4}) == 2.0);
    CHECK(max_adjacent_drop({5, 2, 4, 1}) == 2.0);
}

TEST_CASE("baseline comparison on the reference configuration") {
    const config::RunConfig cfg;
    const auto rep = compare_baselines(load_inputs(cfg), cfg);
    CHECK(rep.reduction_percent >= 90.0);
    CHECK(rep.reduction_percent <= 99.0);
    CHECK(rep.reduction_seconds == doctest::Approx(rep.classical_delay_seconds - rep.semantic_delay_seconds));

    double sem = 0.0, cls = 0.0;
    for (const auto& d : rep.delays) (d.chain == Chain::Semantic ? sem : cls) += d.delay_seconds;
    CHECK(rep.delays.size() == 6);
    CHECK(sem < cls);

    const auto& snrs = cfg.sweep_db;
    const auto sp = rep.curves.psnr(Chain::Semantic), cp = rep.curves.psnr(Chain::Classical);
    const auto at = [&](double snr) { return static_cast<std::size_t>(std::find(snrs.begin(), snrs.end(), snr) - snrs.begin()); };
    CHECK(sp[at(0.0)] > cp[at(0.0)]);
    CHECK(std::abs(sp[at(25.0)] - rep.semantic_reference_psnr) <= 3.0);
    CHECK(std::abs(cp[at(25.0)] - rep.classical_reference_psnr) <= 3.0);

    const auto j = rep.to_json();
    CHECK(j.contains("reduction_percent"));
    CHECK(rep.to_text() == j.dump(2) + "\n");
}

TEST_CASE("service camera") {
    const auto c0 = service_camera(64, 48, 4.0, 0.0);
    CHECK(c0.K(0, 0) == 64.0);
    CHECK((c0.E.R - scene::Mat3::Identity()).norm() < 1e-15);
    const auto c5 = service_camera(64, 48, 4.0, 5.0);
    // The pivot stays on the optical axis at the same depth.
    const auto pivot = c5.E.apply({0.0, 0.0, 4.0});
    CHECK(std::abs(pivot.x()) < 1e-12);
    CHECK(std::abs(pivot.y()) < 1e-12);
    CHECK(std::abs(pivot.z() - 4.0) < 1e-12);
}
