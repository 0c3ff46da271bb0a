#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ceesim/config.hpp"
#include "ceesim/fit.hpp"
#include "ceesim/pipeline.hpp"
#include "ceesim/scene.hpp"
#include "ceesim/synthesis.hpp"

namespace fs = std::filesystem;
using namespace ceesim;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

config::RunConfig resolve(const Common& c) {
    config::RunConfig cfg = c.config.empty() ? config::RunConfig{} : config::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Common& c) {
    fs::create_directories(c.out);
    return c.out;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    std::cout << "wrote " << p.string() << "\n";
}

void write_video(const fs::path& stem, const VideoSequence& v) {
    save_raw(v, stem);
    std::cout << "wrote " << stem.string() << ".rgb and .json\n";
}

pipeline::Chain parse_chain(const std::string& s) {
    if (s == "semantic") return pipeline::Chain::Semantic;
    if (s == "classical") return pipeline::Chain::Classical;
    throw CLI::ValidationError("--chain", "must be semantic or classical");
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON run configuration (defaults to the reference settings)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Override the channel seed");
    sub->add_option("--out", c.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cloud-edge-end semantic video service simulator"};
    app.require_subcommand(1);

    Common common;
    std::string chain_name = "semantic";
    std::optional<double> snr;
    std::vector<double> sweep_list;
    bool benchmark = false;
    bool no_vsr = false;

    auto* transmit = app.add_subcommand("transmit", "Send the user clip through one chain");
    add_common(transmit, common);
    transmit->add_option("--chain", chain_name, "semantic or classical");
    transmit->add_option("--snr", snr, "Channel SNR in dB");

    auto* sweep = app.add_subcommand("sweep", "PSNR/MS-SSIM curves of both chains over an SNR list");
    add_common(sweep, common);
    sweep->add_option("--snr", sweep_list, "SNR points in dB (default: config sweep)");

    auto* composite = app.add_subcommand("composite", "Matte the user clip and composite it onto the background");
    add_common(composite, common);

    auto* reconstruct = app.add_subcommand("reconstruct", "Fit a dynamic Gaussian scene");
    add_common(reconstruct, common);
    reconstruct->add_flag("--benchmark", benchmark, "Fit the synthetic five-Gaussian scene instead of the composite");

    auto* pipe = app.add_subcommand("pipeline", "Run the full service and write the ServiceReport");
    add_common(pipe, common);
    pipe->add_option("--snr", snr, "Channel SNR in dB");
    pipe->add_flag("--no-vsr", no_vsr, "Skip scene reconstruction and rendering");

    auto* compare = app.add_subcommand("compare", "Delay and quality comparison of the two chains");
    add_common(compare, common);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = resolve(common);
        if (snr) cfg.snr_db = *snr;
        if (no_vsr) cfg.vsr.enabled = false;

        if (transmit->parsed()) {
            const auto chain = parse_chain(chain_name);
            const auto in = pipeline::load_inputs(cfg);
            const auto run = pipeline::transmit(in.user, chain, cfg.snr_db, cfg);
            const auto dir = out_dir(common);
            write_video(dir / ("transmit_" + pipeline::to_string(chain)), run.video);
            nlohmann::ordered_json j{{"chain", pipeline::to_string(chain)},
                                     {"snr_db", cfg.snr_db},
                                     {"psnr", run.psnr},
                                     {"ms_ssim", run.ms_ssim},
                                     {"payload_bits", run.stats.payload_bits},
                                     {"channel_symbols", run.stats.channel_symbols},
                                     {"side_info_bits", run.stats.side_info_bits},
                                     {"decode_failures", run.stats.decode_failures},
                                     {"concealed_blocks", run.stats.concealed_blocks}};
            write_text(dir / ("transmit_" + pipeline::to_string(chain) + "_stats.json"), j.dump(2) + "\n");
        } else if (sweep->parsed()) {
            const auto in = pipeline::load_inputs(cfg);
            const auto curves = pipeline::snr_sweep(in.user, cfg, sweep_list.empty() ? cfg.sweep_db : sweep_list);
            write_text(out_dir(common) / "sweep.csv", curves.to_csv());
        } else if (composite->parsed()) {
            const auto in = pipeline::load_inputs(cfg);
            const auto syn = synthesis::synthesize(in.user, in.clean_plate, in.background, cfg.synthesis);
            const auto dir = out_dir(common);
            write_video(dir / "composite", syn.video);
            nlohmann::ordered_json j{{"frames", syn.video.size()}};
            if (!in.mattes.empty()) {
                double iou = 0.0;
                for (std::size_t i = 0; i < syn.mattes.size(); ++i) iou += synthesis::matte_iou(syn.mattes[i], in.mattes[i]);
                j["matte_iou"] = iou / static_cast<double>(syn.mattes.size());
            }
            write_text(dir / "composite_metrics.json", j.dump(2) + "\n");
        } else if (reconstruct->parsed()) {
            const auto dir = out_dir(common);
            if (benchmark) {
                const auto bm = scene::make_synthetic_benchmark();
                const auto fit = scene::fit_scene(bm.obs, bm.init);
                const auto ev = scene::evaluate_scene(fit.scene, bm.truth, bm.heldout);
                scene::save_scene(fit.scene, dir / "benchmark_scene.json");
                std::cout << "wrote " << (dir / "benchmark_scene.json").string() << "\n";
                nlohmann::ordered_json j{{"heldout_psnr", ev.heldout_psnr},
                                         {"epe", ev.epe},
                                         {"pck", ev.pck},
                                         {"initial_loss", fit.report.initial.total},
                                         {"final_loss", fit.report.final.total}};
                write_text(dir / "benchmark.json", j.dump(2) + "\n");
            } else {
                cfg.vsr.enabled = true;
                const auto out = pipeline::run_service(pipeline::load_inputs(cfg), cfg);
                if (!out.scene) throw std::runtime_error(out.report.stage("vsr_preprocess").error);
                scene::save_scene(*out.scene, dir / "scene.json");
                std::cout << "wrote " << (dir / "scene.json").string() << "\n";
                if (out.rendered) write_video(dir / "rendered", *out.rendered);
            }
        } else if (pipe->parsed()) {
            const auto out = pipeline::run_service(pipeline::load_inputs(cfg), cfg);
            const auto dir = out_dir(common);
            write_text(dir / "service_report.json", out.report.to_text());
            if (!out.composite.empty()) write_video(dir / "composite", out.composite);
            if (out.rendered) write_video(dir / "rendered", *out.rendered);
            if (!out.delivered.empty()) write_video(dir / "delivered", out.delivered);
            if (!out.report.completed) return 2;
        } else if (compare->parsed()) {
            const auto rep = pipeline::compare_baselines(pipeline::load_inputs(cfg), cfg);
            const auto dir = out_dir(common);
            write_text(dir / "comparison.json", rep.to_text());
            write_text(dir / "compare_curves.csv", rep.curves.to_csv());
            std::printf("semantic %.3f s, classical %.3f s, reduction %.2f%%\n", rep.semantic_delay_seconds,
                        rep.classical_delay_seconds, rep.reduction_percent);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
