#include "ceesim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ceesim/channel.hpp"
#include "ceesim/classical.hpp"
#include "ceesim/fit.hpp"
#include "ceesim/fixture.hpp"
#include "ceesim/ldpc.hpp"
#include "ceesim/metrics.hpp"
#include "ceesim/semantic.hpp"
#include "ceesim/source_codec.hpp"

namespace ceesim::pipeline {

using nlohmann::ordered_json;

double stage_latency(double payload_bits, const LinkSpec& link, double flops, const NodeSpec& node) {
    if (!(link.throughput > 0.0)) throw std::invalid_argument("link throughput must be positive");
    if (!(node.compute_capacity > 0.0)) throw std::invalid_argument("node capacity must be positive");
    if (payload_bits < 0.0 || flops < 0.0) throw std::invalid_argument("payload and flops must be non-negative");
    return payload_bits / link.throughput + flops / node.compute_capacity;
}

std::string to_string(Chain chain) { return chain == Chain::Semantic ? "semantic" : "classical"; }

std::string to_string(StageStatus status) {
    switch (status) {
        case StageStatus::Ok: return "ok";
        case StageStatus::Skipped: return "skipped";
        case StageStatus::Failed: return "failed";
        case StageStatus::Aborted: return "aborted";
    }
    return "?";
}

Inputs load_inputs(const RunConfig& cfg) {
    Inputs in;
    if (cfg.user_video.empty()) {
        auto fx = fixture::make_fixture(cfg.fixture);
        in.user = std::move(fx.user);
        in.clean_plate = std::move(fx.clean_plate);
        in.background = std::move(fx.background);
        in.mattes = std::move(fx.mattes);
        return in;
    }
    if (cfg.clean_plate.empty() || cfg.background_video.empty())
        throw std::invalid_argument("user_video given without clean_plate and background_video");
    in.user = load_raw(cfg.user_video);
    const auto plate = load_raw(cfg.clean_plate);
    if (plate.empty()) throw std::invalid_argument("clean plate file holds no frames");
    in.clean_plate = plate[0];
    in.background = load_raw(cfg.background_video);
    if (in.user.empty() || in.background.empty()) throw std::invalid_argument("input videos must not be empty");
    if (!in.clean_plate.same_shape(in.user[0]) || !in.background[0].same_shape(in.user[0]))
        throw std::invalid_argument("input videos differ in frame size");
    return in;
}

double classical_payload_bits(const Gop& gop, const RunConfig& cfg) {
    const auto bs = codec::source_encode(gop, cfg.classical.qp);
    const double k = cfg.ldpc.k;
    return std::ceil(static_cast<double>(bs.bit_count()) / k) * 2.0 * k;
}

std::size_t semantic_budget(const Gop& gop, const RunConfig& cfg) {
    switch (cfg.budget.mode) {
        case config::BudgetMode::PayloadRatio:
            return semantic::budget_for_payload(gop, classical_payload_bits(gop, cfg) / cfg.budget.value, cfg.semantic);
        case config::BudgetMode::Fraction: {
            const double n = static_cast<double>(semantic::element_count(gop, cfg.semantic));
            return static_cast<std::size_t>(std::max(1.0, std::round(cfg.budget.value * n)));
        }
        case config::BudgetMode::Symbols:
            return static_cast<std::size_t>(std::max(1.0, std::round(cfg.budget.value)));
    }
    throw std::logic_error("unknown budget mode");
}

double video_psnr(const VideoSequence& x, const VideoSequence& y) { return metrics::mean_psnr(x.frames(), y.frames()); }

double video_ms_ssim(const VideoSequence& x, const VideoSequence& y) {
    metrics::MsSsimOptions opts;
    const int side = std::min(x.width(), x.height());
    while (opts.scales > 1 && side < metrics::ms_ssim_min_size(opts)) --opts.scales;
    if (side < metrics::ms_ssim_min_size(opts)) return std::numeric_limits<double>::quiet_NaN();
    return metrics::mean_ms_ssim(x.frames(), y.frames(), opts);
}

ChainRun transmit(const VideoSequence& video, Chain chain, double snr_db, const RunConfig& cfg,
                  std::uint64_t stream_base) {
    if (video.empty()) throw std::invalid_argument("cannot transmit an empty video");
    const auto gops = segment_gops(video, static_cast<std::size_t>(cfg.gop_size));
    const channel::ChannelConfig ch{snr_db, channel::ChannelKind::Awgn, cfg.seed};
    std::optional<ldpc::LdpcCode> code;
    if (chain == Chain::Classical) code = ldpc::LdpcCode::build(cfg.ldpc);

    ChainRun run;
    std::vector<Gop> out;
    out.reserve(gops.size());
    for (std::size_t g = 0; g < gops.size(); ++g) {
        const std::uint64_t stream = (stream_base << 20) + g;
        if (chain == Chain::Semantic) {
            auto r = semantic::semantic_transmit(gops[g], ch, semantic_budget(gops[g], cfg), cfg.semantic, stream);
            run.stats += r.stats;
            out.push_back(std::move(r.gop));
        } else {
            auto r = classical::classical_transmit(gops[g], ch, cfg.classical, *code, stream);
            run.stats += r.stats;
            out.push_back(std::move(r.gop));
        }
    }
    run.video = concat_gops(out, video.fps());
    run.psnr = video_psnr(run.video, video);
    run.ms_ssim = video_ms_ssim(run.video, video);
    return run;
}

VideoSequence channel_free(const VideoSequence& video, Chain chain, const RunConfig& cfg) {
    if (chain == Chain::Semantic) return transmit(video, chain, kChannelFreeSnrDb, cfg).video;
    std::vector<Gop> out;
    for (const auto& gop : segment_gops(video, static_cast<std::size_t>(cfg.gop_size)))
        out.push_back(classical::classical_reference(gop, cfg.classical.qp));
    return concat_gops(out, video.fps());
}

double StageReport::metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
        if (k == key) return v;
    throw std::out_of_range("stage " + name + " has no metric " + key);
}

bool StageReport::has_metric(const std::string& key) const {
    return std::any_of(metrics.begin(), metrics.end(), [&](const auto& m) { return m.first == key; });
}

const StageReport& ServiceReport::stage(const std::string& name) const {
    for (const auto& s : stages)
        if (s.name == name) return s;
    throw std::out_of_range("no stage named " + name);
}

namespace {

ordered_json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

ordered_json ServiceReport::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["snr_db"] = number(snr_db);
    j["completed"] = completed;
    ordered_json arr = ordered_json::array();
    for (const auto& s : stages) {
        ordered_json st;
        st["name"] = s.name;
        st["status"] = to_string(s.status);
        st["link"] = s.link;
        st["node"] = s.node;
        st["wireless"] = s.wireless;
        st["payload_bits"] = number(s.payload_bits);
        st["transmission_seconds"] = number(s.transmission_seconds);
        st["flops"] = number(s.flops);
        st["compute_seconds"] = number(s.compute_seconds);
        st["delay_seconds"] = number(s.delay_seconds);
        st["tx"] = {{"channel_symbols", s.tx.channel_symbols},
                    {"side_info_bits", number(s.tx.side_info_bits)},
                    {"decode_failures", s.tx.decode_failures},
                    {"concealed_blocks", s.tx.concealed_blocks}};
        ordered_json m = ordered_json::object();
        for (const auto& [k, v] : s.metrics) m[k] = number(v);
        st["metrics"] = m;
        if (!s.error.empty()) st["error"] = s.error;
        arr.push_back(st);
    }
    j["stages"] = arr;
    j["totals"] = {{"delay_seconds", number(total_delay_seconds)},
                   {"wireless_seconds", number(wireless_delay_seconds)},
                   {"fiber_seconds", number(fiber_delay_seconds)},
                   {"compute_seconds", number(compute_delay_seconds)}};
    return j;
}

std::string ServiceReport::to_text() const { return to_json().dump(2) + "\n"; }

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"upload_user_video", "upload_background", "edge_to_cloud",
                                                   "vs_compute",        "vsr_preprocess",    "edge_render",
                                                   "download_3d_video"};
    return names;
}

scene::Camera service_camera(int width, int height, double prior_depth, double yaw_deg) {
    const double yaw = yaw_deg * 3.141592653589793 / 180.0;
    const scene::Mat3 Ry = scene::exp_so3(scene::Vec3(0.0, yaw, 0.0));
    const scene::Vec3 pivot(0.0, 0.0, prior_depth);
    const scene::Vec3 center = pivot - Ry * pivot;
    scene::RigidTransform E{Ry.transpose(), -(Ry.transpose() * center)};
    return scene::Camera::pinhole(width, height, static_cast<double>(width), E);
}

namespace {

enum Streams : std::uint64_t { kUserStream = 1, kPlateStream, kBackgroundStream, kDownloadStream };

double raw_bits(const VideoSequence& v) {
    return static_cast<double>(v.size()) * v.width() * v.height() * Frame::kChannels * 8.0;
}

double scene_bits(const scene::GaussianScene& s) {
    const double per_gaussian = 3 + 4 + 3 + 1 + 3 + s.bases.count();
    const double per_basis = 12.0 * s.bases.timesteps();
    return 32.0 * (per_gaussian * static_cast<double>(s.gaussians.size()) + per_basis * s.bases.count());
}

VideoSequence downsample_video(const VideoSequence& v, int factor) {
    std::vector<Frame> out;
    for (const auto& f : v.frames()) out.push_back(factor == 1 ? f : downsample(f, factor));
    return VideoSequence(std::move(out), v.fps());
}

void set_link(StageReport& st, const std::string& name, const LinkSpec& link, double bits) {
    st.link = name;
    st.wireless = link.kind == config::LinkKind::Wireless;
    st.payload_bits = bits;
    st.transmission_seconds = stage_latency(bits, link, 0.0, NodeSpec{config::NodeRole::End, 1.0});
}

void set_compute(StageReport& st, const NodeSpec& node, double flops) {
    st.node = config::to_string(node.role);
    st.flops = flops;
    st.compute_seconds = stage_latency(0.0, LinkSpec{}, flops, node);
}

}  // namespace

ServiceOutput run_service(const Inputs& inputs, const RunConfig& cfg) {
    cfg.validate();
    ServiceOutput out;
    ServiceReport& rep = out.report;
    rep.seed = cfg.seed;
    rep.snr_db = cfg.snr_db;

    // Values handed from stage to stage.
    VideoSequence user_rx{{}, inputs.user.fps()};
    Frame plate_rx;
    VideoSequence background_rx{{}, inputs.background.fps()};
    VideoSequence to_download{{}, inputs.user.fps()};

    auto upload_user = [&](StageReport& st) {
        auto u = transmit(inputs.user, Chain::Semantic, cfg.snr_db, cfg, kUserStream);
        auto p = transmit(VideoSequence({inputs.clean_plate}, inputs.user.fps()), Chain::Semantic, cfg.snr_db, cfg,
                          kPlateStream);
        user_rx = u.video;
        plate_rx = p.video[0];
        st.tx = u.stats;
        st.tx += p.stats;
        set_link(st, "uplink", cfg.uplink, st.tx.payload_bits);
        set_compute(st, cfg.end, cfg.compute.semantic_extraction);
        st.metrics = {{"psnr", u.psnr},
                      {"ms_ssim", u.ms_ssim},
                      {"clean_plate_psnr", p.psnr},
                      {"semantic_symbols", static_cast<double>(st.tx.channel_symbols)}};
    };

    auto upload_background = [&](StageReport& st) {
        auto b = transmit(inputs.background, Chain::Semantic, cfg.snr_db, cfg, kBackgroundStream);
        background_rx = b.video;
        st.tx = b.stats;
        set_link(st, "camera_uplink", cfg.camera_uplink, st.tx.payload_bits);
        set_compute(st, cfg.end, cfg.compute.semantic_extraction);
        st.metrics = {{"psnr", b.psnr},
                      {"ms_ssim", b.ms_ssim},
                      {"semantic_symbols", static_cast<double>(st.tx.channel_symbols)}};
    };

    auto edge_to_cloud = [&](StageReport& st) {
        const double bits = raw_bits(user_rx) + raw_bits(background_rx) +
                            static_cast<double>(plate_rx.size()) * 8.0;
        set_link(st, "edge_cloud", cfg.edge_cloud, bits);
    };

    auto vs_compute = [&](StageReport& st) {
        const auto remote = synthesis::synthesize(user_rx, plate_rx, background_rx, cfg.synthesis);
        const auto local = synthesis::synthesize(inputs.user, inputs.clean_plate, inputs.background, cfg.synthesis);
        const auto& truth = inputs.mattes.empty() ? local.mattes : inputs.mattes;
        out.composite = remote.video;
        to_download = remote.video;
        set_compute(st, cfg.cloud, cfg.compute.video_synthesis);

        double iou = 0.0, sem = 0.0, det = 0.0, fusion = 0.0;
        const std::size_t n = remote.mattes.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = remote.mattes[i];
            const auto& g = truth[i];
            iou += synthesis::matte_iou(a, g);
            sem += synthesis::semantic_loss(synthesis::downsample_matte(a, cfg.synthesis.thumbnail_factor), g,
                                            cfg.synthesis.thumbnail_factor);
            det += synthesis::detail_loss(a, g, synthesis::transition_mask(g, cfg.synthesis.radius));
            fusion += synthesis::fusion_loss(a, g, user_rx[i], background_rx[i % background_rx.size()]);
        }
        const double dn = static_cast<double>(n);
        st.metrics = {{"matte_iou", iou / dn},
                      {"semantic_loss", sem / dn},
                      {"detail_loss", det / dn},
                      {"fusion_loss", fusion / dn},
                      {"composite_psnr_vs_local", video_psnr(remote.video, local.video)},
                      {"composite_ms_ssim_vs_local", video_ms_ssim(remote.video, local.video)}};
    };

    auto vsr_preprocess = [&](StageReport& st) {
        const auto& v = cfg.vsr;
        const auto small = downsample_video(out.composite, v.downsample);
        scene::Observations obs;
        obs.frames = small.frames();
        const auto cam = service_camera(small.width(), small.height(), v.prior_depth, 0.0);
        obs.cameras.assign(obs.frames.size(), cam);
        obs.depths.assign(obs.frames.size(),
                          std::vector<double>(static_cast<std::size_t>(small.width()) * small.height(), v.prior_depth));
        auto init = scene::initialize_from_frames(obs, v.grid, v.prior_depth, v.fit.basis_count);
        scene::Vec3 mean = scene::Vec3::Zero();
        const auto& f0 = obs.frames.front();
        for (int y = 0; y < f0.height(); ++y)
            for (int x = 0; x < f0.width(); ++x)
                for (int c = 0; c < 3; ++c) mean[c] += f0.at(x, y, c);
        init.background = mean / (static_cast<double>(f0.width()) * f0.height());
        auto fitted = scene::fit_scene(obs, init, v.fit);

        std::vector<Frame> rendered;
        for (int t = 0; t < fitted.scene.timesteps; ++t) rendered.push_back(scene::render(fitted.scene, t).image);
        set_compute(st, cfg.cloud, cfg.compute.vsr_preprocess);
        st.metrics = {{"fit_psnr", metrics::mean_psnr(rendered, obs.frames)},
                      {"initial_loss", fitted.report.initial.total},
                      {"final_loss", fitted.report.final.total},
                      {"accepted_steps", static_cast<double>(fitted.report.accepted)},
                      {"gaussians", static_cast<double>(fitted.scene.gaussians.size())}};
        out.scene = std::move(fitted.scene);
    };

    auto edge_render = [&](StageReport& st) {
        const auto& s = *out.scene;
        const int W = out.composite.width(), H = out.composite.height();
        const auto view = service_camera(W, H, cfg.vsr.prior_depth, cfg.vsr.view_offset_deg);
        const auto front = service_camera(W, H, cfg.vsr.prior_depth, 0.0);
        std::vector<Frame> frames, canonical;
        for (int t = 0; t < s.timesteps; ++t) {
            frames.push_back(scene::render(s, t, view).image);
            canonical.push_back(scene::render(s, t, front).image);
        }
        out.rendered = VideoSequence(std::move(frames), out.composite.fps());
        to_download = *out.rendered;
        set_link(st, "edge_cloud", cfg.edge_cloud, scene_bits(s));
        set_compute(st, cfg.edge, cfg.compute.render);
        st.metrics = {{"canonical_view_psnr", metrics::mean_psnr(canonical, out.composite.frames())},
                      {"view_offset_deg", cfg.vsr.view_offset_deg}};
    };

    auto download = [&](StageReport& st) {
        auto d = transmit(to_download, Chain::Semantic, cfg.snr_db, cfg, kDownloadStream);
        out.delivered = d.video;
        st.tx = d.stats;
        set_link(st, "downlink", cfg.downlink, st.tx.payload_bits);
        set_compute(st, cfg.edge, cfg.compute.semantic_extraction);
        st.metrics = {{"psnr", d.psnr},
                      {"ms_ssim", d.ms_ssim},
                      {"semantic_symbols", static_cast<double>(st.tx.channel_symbols)}};
    };

    const std::vector<std::function<void(StageReport&)>> bodies = {upload_user,    upload_background, edge_to_cloud,
                                                                    vs_compute,     vsr_preprocess,    edge_render,
                                                                    download};
    bool aborted = false;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        StageReport st;
        st.name = stage_names()[i];
        const bool vsr_stage = st.name == "vsr_preprocess" || st.name == "edge_render";
        if (aborted) {
            st.status = StageStatus::Aborted;
        } else if (vsr_stage && !cfg.vsr.enabled) {
            st.status = StageStatus::Skipped;
        } else {
            try {
                bodies[i](st);
                st.delay_seconds = st.transmission_seconds + st.compute_seconds;
            } catch (const std::exception& e) {
                StageReport failed;
                failed.name = st.name;
                failed.status = StageStatus::Failed;
                failed.error = e.what();
                st = std::move(failed);
                aborted = true;
            }
        }
        rep.stages.push_back(std::move(st));
    }

    for (const auto& st : rep.stages) {
        rep.total_delay_seconds += st.delay_seconds;
        rep.compute_delay_seconds += st.compute_seconds;
        (st.wireless ? rep.wireless_delay_seconds : rep.fiber_delay_seconds) += st.transmission_seconds;
    }
    rep.completed = !aborted;
    return out;
}

std::vector<double> CurveData::psnr(Chain chain) const {
    std::vector<double> v;
    for (const auto& r : rows)
        if (r.chain == chain) v.push_back(r.psnr);
    return v;
}

std::vector<double> CurveData::ms_ssim(Chain chain) const {
    std::vector<double> v;
    for (const auto& r : rows)
        if (r.chain == chain) v.push_back(r.ms_ssim);
    return v;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string CurveData::to_csv() const {
    std::string s = "snr_db,chain,psnr,ms_ssim\n";
    for (const auto& r : rows) s += fmt(r.snr_db) + "," + to_string(r.chain) + "," + fmt(r.psnr) + "," + fmt(r.ms_ssim) + "\n";
    return s;
}

CurveData snr_sweep(const VideoSequence& video, const RunConfig& cfg, const std::vector<double>& snr_list) {
    if (snr_list.empty()) throw std::invalid_argument("snr_sweep needs at least one SNR");
    CurveData data;
    for (double snr : snr_list)
        for (Chain chain : {Chain::Semantic, Chain::Classical}) {
            const auto r = transmit(video, chain, snr, cfg);
            data.rows.push_back({snr, chain, r.psnr, r.ms_ssim});
        }
    return data;
}

double max_adjacent_drop(const std::vector<double>& values) {
    double drop = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) drop = std::max(drop, values[i] - values[i - 1]);
    return drop;
}

ordered_json ComparisonReport::to_json() const {
    ordered_json j;
    ordered_json rows = ordered_json::array();
    for (const auto& d : delays)
        rows.push_back({{"item", d.item},
                        {"chain", to_string(d.chain)},
                        {"payload_bits", number(d.payload_bits)},
                        {"delay_seconds", number(d.delay_seconds)}});
    j["delays"] = rows;
    j["classical_delay_seconds"] = number(classical_delay_seconds);
    j["semantic_delay_seconds"] = number(semantic_delay_seconds);
    j["reduction_seconds"] = number(reduction_seconds);
    j["reduction_percent"] = number(reduction_percent);
    j["channel_free_psnr"] = {{"semantic", number(semantic_reference_psnr)},
                              {"classical", number(classical_reference_psnr)}};
    ordered_json curve = ordered_json::array();
    for (const auto& r : curves.rows)
        curve.push_back({{"snr_db", number(r.snr_db)},
                         {"chain", to_string(r.chain)},
                         {"psnr", number(r.psnr)},
                         {"ms_ssim", number(r.ms_ssim)}});
    j["curves"] = curve;
    return j;
}

std::string ComparisonReport::to_text() const { return to_json().dump(2) + "\n"; }

ComparisonReport compare_baselines(const Inputs& inputs, const RunConfig& cfg) {
    cfg.validate();
    const auto local = synthesis::synthesize(inputs.user, inputs.clean_plate, inputs.background, cfg.synthesis).video;
    ComparisonReport rep;

    const NodeSpec idle{config::NodeRole::End, 1.0};
    struct Item {
        const char* name;
        const VideoSequence* video;
        const LinkSpec* link;
    };
    const Item items[] = {{"user_video", &inputs.user, &cfg.uplink},
                          {"background", &inputs.background, &cfg.camera_uplink},
                          {"synthesized_video", &local, &cfg.downlink}};
    for (const auto& it : items) {
        const auto sem = transmit(*it.video, Chain::Semantic, cfg.snr_db, cfg);
        double cls_bits = 0.0;
        for (const auto& gop : segment_gops(*it.video, static_cast<std::size_t>(cfg.gop_size)))
            cls_bits += classical_payload_bits(gop, cfg);
        rep.delays.push_back(
            {it.name, Chain::Semantic, sem.stats.payload_bits, stage_latency(sem.stats.payload_bits, *it.link, 0.0, idle)});
        rep.delays.push_back({it.name, Chain::Classical, cls_bits, stage_latency(cls_bits, *it.link, 0.0, idle)});
    }
    rep.semantic_delay_seconds = rep.delays[4].delay_seconds;
    rep.classical_delay_seconds = rep.delays[5].delay_seconds;
    rep.reduction_seconds = rep.classical_delay_seconds - rep.semantic_delay_seconds;
    rep.reduction_percent = 100.0 * rep.reduction_seconds / rep.classical_delay_seconds;
    rep.semantic_reference_psnr = video_psnr(channel_free(local, Chain::Semantic, cfg), local);
    rep.classical_reference_psnr = video_psnr(channel_free(local, Chain::Classical, cfg), local);
    rep.curves = snr_sweep(local, cfg, cfg.sweep_db);
    return rep;
}

}  // namespace ceesim::pipeline
