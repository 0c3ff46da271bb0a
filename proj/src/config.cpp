#include "ceesim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ceesim::config {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Cloud: return "cloud";
        case NodeRole::Edge: return "edge";
        case NodeRole::End: return "end";
    }
    return "?";
}

std::string to_string(LinkKind kind) { return kind == LinkKind::Fiber ? "fiber" : "wireless"; }

std::string to_string(BudgetMode mode) {
    switch (mode) {
        case BudgetMode::PayloadRatio: return "payload_ratio";
        case BudgetMode::Fraction: return "fraction";
        case BudgetMode::Symbols: return "symbols";
    }
    return "?";
}

namespace {

NodeRole parse_role(const std::string& s) {
    if (s == "cloud") return NodeRole::Cloud;
    if (s == "edge") return NodeRole::Edge;
    if (s == "end") return NodeRole::End;
    throw std::invalid_argument("unknown node role: " + s);
}

LinkKind parse_kind(const std::string& s) {
    if (s == "wireless") return LinkKind::Wireless;
    if (s == "fiber") return LinkKind::Fiber;
    throw std::invalid_argument("unknown link kind: " + s);
}

BudgetMode parse_mode(const std::string& s) {
    if (s == "payload_ratio") return BudgetMode::PayloadRatio;
    if (s == "fraction") return BudgetMode::Fraction;
    if (s == "symbols") return BudgetMode::Symbols;
    throw std::invalid_argument("unknown budget mode: " + s);
}

double read_snr(const json& v) { return v.get<double>(); }

ordered_json write_snr(double v) { return v; }

template <class T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

ordered_json node_json(const NodeSpec& n) {
    return {{"role", to_string(n.role)}, {"compute_capacity", n.compute_capacity}};
}

NodeSpec node_from(const json& j, NodeSpec n) {
    if (j.contains("role")) n.role = parse_role(j.at("role").get<std::string>());
    get(j, "compute_capacity", n.compute_capacity);
    return n;
}

ordered_json link_json(const LinkSpec& l) {
    return {{"from", to_string(l.from)}, {"to", to_string(l.to)}, {"throughput", l.throughput}, {"kind", to_string(l.kind)}};
}

LinkSpec link_from(const json& j, LinkSpec l) {
    if (j.contains("from")) l.from = parse_role(j.at("from").get<std::string>());
    if (j.contains("to")) l.to = parse_role(j.at("to").get<std::string>());
    get(j, "throughput", l.throughput);
    if (j.contains("kind")) l.kind = parse_kind(j.at("kind").get<std::string>());
    return l;
}

ordered_json fit_json(const scene::FitConfig& f) {
    return {{"iterations", f.iterations},
            {"lr_position", f.lr_position},
            {"lr_rotation", f.lr_rotation},
            {"lr_scale", f.lr_scale},
            {"lr_opacity", f.lr_opacity},
            {"lr_color", f.lr_color},
            {"lr_motion", f.lr_motion},
            {"lr_basis_translation", f.lr_basis_translation},
            {"lr_basis_rotation", f.lr_basis_rotation},
            {"weight_image", f.weight_image},
            {"weight_depth", f.weight_depth},
            {"weight_track", f.weight_track},
            {"charbonnier_eps", f.charbonnier_eps},
            {"basis_count", f.basis_count},
            {"optimize_bases", f.optimize_bases},
            {"min_step_scale", f.min_step_scale}};
}

scene::FitConfig fit_from(const json& j, scene::FitConfig f) {
    get(j, "iterations", f.iterations);
    get(j, "lr_position", f.lr_position);
    get(j, "lr_rotation", f.lr_rotation);
    get(j, "lr_scale", f.lr_scale);
    get(j, "lr_opacity", f.lr_opacity);
    get(j, "lr_color", f.lr_color);
    get(j, "lr_motion", f.lr_motion);
    get(j, "lr_basis_translation", f.lr_basis_translation);
    get(j, "lr_basis_rotation", f.lr_basis_rotation);
    get(j, "weight_image", f.weight_image);
    get(j, "weight_depth", f.weight_depth);
    get(j, "weight_track", f.weight_track);
    get(j, "charbonnier_eps", f.charbonnier_eps);
    get(j, "basis_count", f.basis_count);
    get(j, "optimize_bases", f.optimize_bases);
    get(j, "min_step_scale", f.min_step_scale);
    return f;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
    require(gop_size >= 1, "gop_size must be >= 1");
    require(std::isfinite(snr_db), "snr_db must be finite");
    for (double s : sweep_db) require(std::isfinite(s), "sweep values must be finite");
    require(fixture.width >= 16 && fixture.height >= 16 && fixture.frames >= 1 && fixture.fps > 0,
            "fixture dimensions out of range");
    require(classical.qp > 0 && classical.max_iters >= 1, "classical settings out of range");
    require(ldpc.k >= 8 && ldpc.column_degree >= 2, "ldpc parameters out of range");
    require(budget.value > 0, "budget value must be positive");
    if (budget.mode == BudgetMode::Fraction) require(budget.value <= 1.0, "budget fraction must be <= 1");
    require(synthesis.radius >= 0 && synthesis.thumbnail_factor >= 1 && synthesis.softness > 0,
            "synthesis settings out of range");
    require(vsr.downsample >= 1 && vsr.grid >= 1 && vsr.prior_depth > 0 && vsr.fit.basis_count >= 1 &&
                vsr.fit.iterations >= 0,
            "vsr settings out of range");
    for (const NodeSpec* n : {&end, &edge, &cloud}) require(n->compute_capacity > 0, "node capacity must be positive");
    for (const LinkSpec* l : {&uplink, &camera_uplink, &edge_cloud, &downlink})
        require(l->throughput > 0, "link throughput must be positive");
    require(compute.semantic_extraction >= 0 && compute.video_synthesis >= 0 && compute.vsr_preprocess >= 0 &&
                compute.render >= 0,
            "compute costs must be non-negative");
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["inputs"] = {{"user_video", c.user_video}, {"clean_plate", c.clean_plate}, {"background_video", c.background_video}};
    j["fixture"] = {{"width", c.fixture.width},
                    {"height", c.fixture.height},
                    {"frames", c.fixture.frames},
                    {"fps", c.fixture.fps},
                    {"seed", c.fixture.seed}};
    j["gop_size"] = c.gop_size;
    ordered_json sweep = ordered_json::array();
    for (double s : c.sweep_db) sweep.push_back(write_snr(s));
    j["channel"] = {{"snr_db", write_snr(c.snr_db)}, {"sweep_db", sweep}};
    j["classical"] = {{"qp", c.classical.qp},
                      {"max_iters", c.classical.max_iters},
                      {"ldpc", {{"k", c.ldpc.k}, {"column_degree", c.ldpc.column_degree}, {"seed", c.ldpc.seed}}}};
    j["semantic"] = {{"block_size", c.semantic.block_size},
                     {"channel_dim", c.semantic.channel_dim},
                     {"entropy_step", c.semantic.entropy_step},
                     {"scale_floor", c.semantic.scale_floor},
                     {"bits_per_symbol", c.semantic.bits_per_symbol},
                     {"power_exponent", c.semantic.power_exponent},
                     {"budget", {{"mode", to_string(c.budget.mode)}, {"value", c.budget.value}}}};
    j["synthesis"] = {{"threshold", c.synthesis.threshold},
                      {"softness", c.synthesis.softness},
                      {"radius", c.synthesis.radius},
                      {"thumbnail_factor", c.synthesis.thumbnail_factor}};
    j["vsr"] = {{"enabled", c.vsr.enabled},
                {"downsample", c.vsr.downsample},
                {"grid", c.vsr.grid},
                {"prior_depth", c.vsr.prior_depth},
                {"view_offset_deg", c.vsr.view_offset_deg},
                {"fit", fit_json(c.vsr.fit)}};
    j["nodes"] = {{"end", node_json(c.end)}, {"edge", node_json(c.edge)}, {"cloud", node_json(c.cloud)}};
    j["links"] = {{"uplink", link_json(c.uplink)},
                  {"camera_uplink", link_json(c.camera_uplink)},
                  {"edge_cloud", link_json(c.edge_cloud)},
                  {"downlink", link_json(c.downlink)}};
    j["compute_flop"] = {{"semantic_extraction", c.compute.semantic_extraction},
                         {"video_synthesis", c.compute.video_synthesis},
                         {"vsr_preprocess", c.compute.vsr_preprocess},
                         {"render", c.compute.render}};
    return j;
}

RunConfig from_json(const json& j) {
    RunConfig c;
    get(j, "seed", c.seed);
    if (j.contains("inputs")) {
        const auto& in = j.at("inputs");
        get(in, "user_video", c.user_video);
        get(in, "clean_plate", c.clean_plate);
        get(in, "background_video", c.background_video);
    }
    if (j.contains("fixture")) {
        const auto& f = j.at("fixture");
        get(f, "width", c.fixture.width);
        get(f, "height", c.fixture.height);
        get(f, "frames", c.fixture.frames);
        get(f, "fps", c.fixture.fps);
        get(f, "seed", c.fixture.seed);
    }
    get(j, "gop_size", c.gop_size);
    if (j.contains("channel")) {
        const auto& ch = j.at("channel");
        if (ch.contains("snr_db")) c.snr_db = read_snr(ch.at("snr_db"));
        if (ch.contains("sweep_db")) {
            c.sweep_db.clear();
            for (const auto& v : ch.at("sweep_db")) c.sweep_db.push_back(read_snr(v));
        }
    }
    if (j.contains("classical")) {
        const auto& cl = j.at("classical");
        get(cl, "qp", c.classical.qp);
        get(cl, "max_iters", c.classical.max_iters);
        if (cl.contains("ldpc")) {
            const auto& l = cl.at("ldpc");
            get(l, "k", c.ldpc.k);
            get(l, "column_degree", c.ldpc.column_degree);
            get(l, "seed", c.ldpc.seed);
        }
    }
    if (j.contains("semantic")) {
        const auto& s = j.at("semantic");
        get(s, "block_size", c.semantic.block_size);
        get(s, "channel_dim", c.semantic.channel_dim);
        get(s, "entropy_step", c.semantic.entropy_step);
        get(s, "scale_floor", c.semantic.scale_floor);
        get(s, "bits_per_symbol", c.semantic.bits_per_symbol);
        get(s, "power_exponent", c.semantic.power_exponent);
        if (s.contains("budget")) {
            const auto& b = s.at("budget");
            if (b.contains("mode")) c.budget.mode = parse_mode(b.at("mode").get<std::string>());
            get(b, "value", c.budget.value);
        }
    }
    if (j.contains("synthesis")) {
        const auto& s = j.at("synthesis");
        get(s, "threshold", c.synthesis.threshold);
        get(s, "softness", c.synthesis.softness);
        get(s, "radius", c.synthesis.radius);
        get(s, "thumbnail_factor", c.synthesis.thumbnail_factor);
    }
    if (j.contains("vsr")) {
        const auto& v = j.at("vsr");
        get(v, "enabled", c.vsr.enabled);
        get(v, "downsample", c.vsr.downsample);
        get(v, "grid", c.vsr.grid);
        get(v, "prior_depth", c.vsr.prior_depth);
        get(v, "view_offset_deg", c.vsr.view_offset_deg);
        if (v.contains("fit")) c.vsr.fit = fit_from(v.at("fit"), c.vsr.fit);
    }
    if (j.contains("nodes")) {
        const auto& n = j.at("nodes");
        if (n.contains("end")) c.end = node_from(n.at("end"), c.end);
        if (n.contains("edge")) c.edge = node_from(n.at("edge"), c.edge);
        if (n.contains("cloud")) c.cloud = node_from(n.at("cloud"), c.cloud);
    }
    if (j.contains("links")) {
        const auto& l = j.at("links");
        if (l.contains("uplink")) c.uplink = link_from(l.at("uplink"), c.uplink);
        if (l.contains("camera_uplink")) c.camera_uplink = link_from(l.at("camera_uplink"), c.camera_uplink);
        if (l.contains("edge_cloud")) c.edge_cloud = link_from(l.at("edge_cloud"), c.edge_cloud);
        if (l.contains("downlink")) c.downlink = link_from(l.at("downlink"), c.downlink);
    }
    if (j.contains("compute_flop")) {
        const auto& f = j.at("compute_flop");
        get(f, "semantic_extraction", c.compute.semantic_extraction);
        get(f, "video_synthesis", c.compute.video_synthesis);
        get(f, "vsr_preprocess", c.compute.vsr_preprocess);
        get(f, "render", c.compute.render);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    RunConfig c = from_json(j);
    // Relative input paths are resolved against the config file.
    const auto base = path.parent_path();
    for (std::string* p : {&c.user_video, &c.clean_plate, &c.background_video})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    return c;
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace ceesim::config
