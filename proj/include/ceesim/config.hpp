#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceesim/classical.hpp"
#include "ceesim/fit.hpp"
#include "ceesim/fixture.hpp"
#include "ceesim/ldpc.hpp"
#include "ceesim/semantic.hpp"
#include "ceesim/synthesis.hpp"

namespace ceesim::config {

enum class NodeRole { Cloud, Edge, End };
enum class LinkKind { Wireless, Fiber };

struct NodeSpec {
    NodeRole role = NodeRole::End;
    /// FLOP per second.
    double compute_capacity = 1.0;
};

struct LinkSpec {
    NodeRole from = NodeRole::End;
    NodeRole to = NodeRole::Edge;
    /// Bits per second.
    double throughput = 1.0;
    LinkKind kind = LinkKind::Wireless;
};

/// How the semantic symbol budget is chosen per GOP.
enum class BudgetMode {
    /// value = classical coded payload / semantic payload (bits).
    PayloadRatio,
    /// value = fraction of all feature elements kept.
    Fraction,
    /// value = symbols per GOP.
    Symbols,
};

struct BudgetSpec {
    BudgetMode mode = BudgetMode::PayloadRatio;
    /// Classical / semantic delay of the synthesized video in the reference measurements.
    double value = 5718.0 / 227.322;
};

struct VsrSpec {
    bool enabled = true;
    /// The composite is box-downsampled by this factor before fitting.
    int downsample = 4;
    /// Gaussians are seeded on a grid x grid lattice.
    int grid = 16;
    /// Constant depth prior (scene units) used for seeding and supervision.
    double prior_depth = 4.0;
    /// Rotation of the viewing camera about the vertical axis through the
    /// scene center, degrees.
    double view_offset_deg = 5.0;
    scene::FitConfig fit = service_fit();

    static scene::FitConfig service_fit() {
        scene::FitConfig f;
        f.iterations = 100;
        f.basis_count = 4;
        f.lr_position = f.lr_rotation = f.lr_scale = 2e-3;
        f.lr_basis_translation = f.lr_basis_rotation = 1e-3;
        f.min_step_scale = 1e-6;
        return f;
    }
};

/// FLOP charged to each compute step.
struct ComputeSpec {
    double semantic_extraction = 1e12;
    double video_synthesis = 1e14;
    double vsr_preprocess = 5.3e16;
    double render = 7e15;
};

struct RunConfig {
    std::uint64_t seed = 1;
    /// Raw video stems; empty paths select the procedural fixture.
    std::string user_video;
    std::string clean_plate;
    std::string background_video;
    fixture::FixtureSpec fixture;

    int gop_size = 4;
    double snr_db = 0.0;
    std::vector<double> sweep_db = {-10, -5, 0, 5, 10, 15, 20, 25};

    classical::ClassicalSettings classical;
    ldpc::LdpcParams ldpc;
    semantic::SemanticSettings semantic;
    BudgetSpec budget;
    synthesis::SynthesisSettings synthesis;
    VsrSpec vsr;

    NodeSpec end{NodeRole::End, 1.2e12};
    NodeSpec edge{NodeRole::Edge, 1e13};
    NodeSpec cloud{NodeRole::Cloud, 1.3e16};
    LinkSpec uplink{NodeRole::End, NodeRole::Edge, 92e6 / 5718.0, LinkKind::Wireless};
    LinkSpec camera_uplink{NodeRole::End, NodeRole::Edge, 92e6 / 5718.0, LinkKind::Wireless};
    LinkSpec edge_cloud{NodeRole::Edge, NodeRole::Cloud, 1e10, LinkKind::Fiber};
    LinkSpec downlink{NodeRole::Edge, NodeRole::End, 92e6 / 5718.0, LinkKind::Wireless};
    ComputeSpec compute;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
RunConfig from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

std::string to_string(NodeRole role);
std::string to_string(LinkKind kind);
std::string to_string(BudgetMode mode);

}  // namespace ceesim::config
