#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ceesim/config.hpp"
#include "ceesim/scene.hpp"
#include "ceesim/synthesis.hpp"
#include "ceesim/tx_stats.hpp"
#include "ceesim/video.hpp"

namespace ceesim::pipeline {

using config::LinkSpec;
using config::NodeSpec;
using config::RunConfig;

/// payload_bits / throughput + flops / capacity. Throws std::invalid_argument
/// for non-positive throughput or capacity, or negative bits or flops.
double stage_latency(double payload_bits, const LinkSpec& link, double flops, const NodeSpec& node);

enum class Chain { Semantic, Classical };
std::string to_string(Chain chain);

/// The videos a service request starts from.
struct Inputs {
    VideoSequence user{{}, 25.0};
    Frame clean_plate;
    VideoSequence background{{}, 25.0};
    /// Ground-truth mattes of the user video when known (fixture only).
    std::vector<synthesis::AlphaMatte> mattes;
};

/// Loads the configured raw videos, or builds the fixture when no user video
/// is named. The clean plate is the first frame of its file.
Inputs load_inputs(const RunConfig& cfg);

/// Symbols per GOP for the semantic chain under cfg.budget.
std::size_t semantic_budget(const Gop& gop, const RunConfig& cfg);

/// LDPC-coded bits the classical chain sends for one GOP.
double classical_payload_bits(const Gop& gop, const RunConfig& cfg);

struct ChainRun {
    VideoSequence video{{}, 25.0};
    TxStats stats;
    double psnr = 0.0;
    double ms_ssim = 0.0;
};

/// Sends a video GOP by GOP through one chain. GOP g uses channel stream
/// (stream_base << 20) + g.
ChainRun transmit(const VideoSequence& video, Chain chain, double snr_db, const RunConfig& cfg,
                  std::uint64_t stream_base = 0);

/// Stand-in for an infinite SNR (noise variance 1e-30).
inline constexpr double kChannelFreeSnrDb = 300.0;

/// What a chain delivers with the channel bypassed.
VideoSequence channel_free(const VideoSequence& video, Chain chain, const RunConfig& cfg);

/// Mean MS-SSIM with as many scales as the frame size allows (at most 5);
/// NaN when the frames are smaller than one window.
double video_ms_ssim(const VideoSequence& x, const VideoSequence& y);
double video_psnr(const VideoSequence& x, const VideoSequence& y);

enum class StageStatus { Ok, Skipped, Failed, Aborted };
std::string to_string(StageStatus status);

struct StageReport {
    std::string name;
    StageStatus status = StageStatus::Ok;
    std::string link;  // empty for compute-only stages
    std::string node;  // empty for pure transfers
    double payload_bits = 0.0;
    double transmission_seconds = 0.0;
    double flops = 0.0;
    double compute_seconds = 0.0;
    double delay_seconds = 0.0;
    bool wireless = false;
    TxStats tx;
    std::vector<std::pair<std::string, double>> metrics;
    std::string error;

    double metric(const std::string& key) const;
    bool has_metric(const std::string& key) const;
};

struct ServiceReport {
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    std::vector<StageReport> stages;
    double total_delay_seconds = 0.0;
    double wireless_delay_seconds = 0.0;
    double fiber_delay_seconds = 0.0;
    double compute_delay_seconds = 0.0;
    bool completed = false;

    const StageReport& stage(const std::string& name) const;
    nlohmann::ordered_json to_json() const;
    /// Indented JSON text; identical inputs give identical bytes.
    std::string to_text() const;
};

/// Stage names in service order.
const std::vector<std::string>& stage_names();

struct ServiceOutput {
    ServiceReport report;
    /// Composite produced in the cloud from the received inputs (empty if VS did not run).
    VideoSequence composite{{}, 25.0};
    /// Edge render of the fitted scene (when VSR ran).
    std::optional<VideoSequence> rendered;
    std::optional<scene::GaussianScene> scene;
    /// What the end device finally receives.
    VideoSequence delivered{{}, 25.0};
};

/// The full cloud-edge-end service flow at cfg.snr_db. A stage that throws is
/// marked failed and every later stage aborted.
ServiceOutput run_service(const Inputs& inputs, const RunConfig& cfg);

struct CurveRow {
    double snr_db = 0.0;
    Chain chain = Chain::Semantic;
    double psnr = 0.0;
    double ms_ssim = 0.0;
};

struct CurveData {
    std::vector<CurveRow> rows;

    std::vector<double> psnr(Chain chain) const;
    std::vector<double> ms_ssim(Chain chain) const;
    /// snr_db,chain,psnr,ms_ssim with a header line.
    std::string to_csv() const;
};

/// Both chains at every SNR, semantic row first per SNR. Throws
/// std::invalid_argument on an empty list.
CurveData snr_sweep(const VideoSequence& video, const RunConfig& cfg, const std::vector<double>& snr_list);

/// Quality lost by stepping down one sweep point, for values ordered by
/// increasing SNR: max of values[i] - values[i-1], or 0.
double max_adjacent_drop(const std::vector<double>& values);

struct DelayRow {
    std::string item;
    Chain chain = Chain::Semantic;
    double payload_bits = 0.0;
    double delay_seconds = 0.0;
};

struct ComparisonReport {
    std::vector<DelayRow> delays;
    /// Delivery of the synthesized video over the downlink.
    double classical_delay_seconds = 0.0;
    double semantic_delay_seconds = 0.0;
    double reduction_seconds = 0.0;
    double reduction_percent = 0.0;
    double semantic_reference_psnr = 0.0;
    double classical_reference_psnr = 0.0;
    CurveData curves;

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

/// Delay rows for the user video, the background and the locally composited
/// video under both chains, plus quality curves of the composite over cfg.sweep_db.
ComparisonReport compare_baselines(const Inputs& inputs, const RunConfig& cfg);

/// Camera used for the scene fit (downsampled resolution) or for rendering at
/// full resolution; yaw_deg rotates it about the vertical axis through the
/// point at prior_depth on the optical axis.
scene::Camera service_camera(int width, int height, double prior_depth, double yaw_deg);

}  // namespace ceesim::pipeline
