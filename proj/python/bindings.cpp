#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ceesim/channel.hpp"
#include "ceesim/config.hpp"
#include "ceesim/fixture.hpp"
#include "ceesim/metrics.hpp"
#include "ceesim/pipeline.hpp"
#include "ceesim/scene.hpp"
#include "ceesim/fit.hpp"

namespace py = pybind11;
using namespace ceesim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Frame to_frame(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) array");
    const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    return Frame(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_frame(const Frame& f) {
    Array out(std::vector<py::ssize_t>{f.height(), f.width(), 3});
    std::copy(f.samples().begin(), f.samples().end(), out.mutable_data());
    return out;
}

VideoSequence to_video(const Array& a, double fps) {
    if (a.ndim() != 4 || a.shape(3) != 3) throw std::invalid_argument("expected a (T, H, W, 3) array");
    const auto t = a.shape(0), h = a.shape(1), w = a.shape(2);
    const std::size_t per = static_cast<std::size_t>(h * w * 3);
    std::vector<Frame> frames;
    for (py::ssize_t i = 0; i < t; ++i)
        frames.emplace_back(static_cast<int>(w), static_cast<int>(h),
                            std::vector<double>(a.data() + i * per, a.data() + (i + 1) * per));
    return VideoSequence(std::move(frames), fps);
}

Array from_video(const VideoSequence& v) {
    if (v.empty()) return Array(std::vector<py::ssize_t>{0, 0, 0, 3});
    Array out({static_cast<py::ssize_t>(v.size()), static_cast<py::ssize_t>(v.height()),
               static_cast<py::ssize_t>(v.width()), py::ssize_t{3}});
    double* dst = out.mutable_data();
    for (const auto& f : v.frames()) dst = std::copy(f.samples().begin(), f.samples().end(), dst);
    return out;
}

config::RunConfig parse_config(const std::string& text) {
    auto cfg = text.empty() ? config::RunConfig{} : config::from_json(nlohmann::json::parse(text));
    cfg.validate();
    return cfg;
}

pipeline::Chain parse_chain(const std::string& s) {
    if (s == "semantic") return pipeline::Chain::Semantic;
    if (s == "classical") return pipeline::Chain::Classical;
    throw std::invalid_argument("chain must be 'semantic' or 'classical'");
}

}  // namespace

PYBIND11_MODULE(_ceesim, m) {
    m.doc() = "Cloud-edge-end semantic video service simulator";

    m.def("default_config", [] { return config::to_json(config::RunConfig{}).dump(); });

    m.def("mse", [](const Array& x, const Array& y) { return metrics::mse(to_frame(x), to_frame(y)); });
    m.def("psnr", [](const Array& x, const Array& y) { return metrics::psnr(to_frame(x), to_frame(y)); });
    m.def("ms_ssim", [](const Array& x, const Array& y) { return metrics::ms_ssim(to_frame(x), to_frame(y)); });

    m.def(
        "awgn",
        [](const Array& symbols, double snr_db, std::uint64_t seed, std::uint64_t stream) {
            channel::SymbolBlock b{{symbols.data(), symbols.data() + symbols.size()}};
            const auto rx = channel::awgn(b, {snr_db, channel::ChannelKind::Awgn, seed}, stream);
            Array out(static_cast<py::ssize_t>(rx.symbols.size()));
            std::copy(rx.symbols.begin(), rx.symbols.end(), out.mutable_data());
            return out;
        },
        py::arg("symbols"), py::arg("snr_db"), py::arg("seed") = 1, py::arg("stream") = 0);

    m.def(
        "fixture",
        [](const std::string& cfg_text) {
            const auto cfg = parse_config(cfg_text);
            const auto fx = fixture::make_fixture(cfg.fixture);
            py::dict d;
            d["user"] = from_video(fx.user);
            d["clean_plate"] = from_frame(fx.clean_plate);
            d["background"] = from_video(fx.background);
            return d;
        },
        py::arg("config") = "");

    m.def(
        "transmit",
        [](const Array& video, const std::string& chain, double snr_db, const std::string& cfg_text) {
            const auto cfg = parse_config(cfg_text);
            const auto run = pipeline::transmit(to_video(video, 25.0), parse_chain(chain), snr_db, cfg);
            py::dict d;
            d["video"] = from_video(run.video);
            d["psnr"] = run.psnr;
            d["ms_ssim"] = run.ms_ssim;
            d["payload_bits"] = run.stats.payload_bits;
            d["channel_symbols"] = run.stats.channel_symbols;
            d["decode_failures"] = run.stats.decode_failures;
            return d;
        },
        py::arg("video"), py::arg("chain"), py::arg("snr_db"), py::arg("config") = "");

    m.def(
        "sweep_csv",
        [](const Array& video, const std::vector<double>& snrs, const std::string& cfg_text) {
            return pipeline::snr_sweep(to_video(video, 25.0), parse_config(cfg_text), snrs).to_csv();
        },
        py::arg("video"), py::arg("snr_db"), py::arg("config") = "");

    m.def(
        "stage_latency",
        [](double bits, double throughput, double flops, double capacity) {
            return pipeline::stage_latency(bits, {config::NodeRole::End, config::NodeRole::Edge, throughput},
                                           flops, {config::NodeRole::Edge, capacity});
        },
        py::arg("payload_bits"), py::arg("throughput"), py::arg("flops"), py::arg("capacity"));

    m.def(
        "run_service",
        [](const std::string& cfg_text) {
            const auto cfg = parse_config(cfg_text);
            py::gil_scoped_release release;
            return pipeline::run_service(pipeline::load_inputs(cfg), cfg).report.to_text();
        },
        py::arg("config") = "");

    m.def(
        "compare",
        [](const std::string& cfg_text) {
            const auto cfg = parse_config(cfg_text);
            py::gil_scoped_release release;
            return pipeline::compare_baselines(pipeline::load_inputs(cfg), cfg).to_text();
        },
        py::arg("config") = "");

    m.def(
        "benchmark_fit",
        [](std::uint64_t seed) {
            const auto bm = scene::make_synthetic_benchmark(seed);
            const auto fit = scene::fit_scene(bm.obs, bm.init);
            const auto ev = scene::evaluate_scene(fit.scene, bm.truth, bm.heldout);
            py::dict d;
            d["heldout_psnr"] = ev.heldout_psnr;
            d["epe"] = ev.epe;
            d["pck"] = ev.pck;
            d["history"] = fit.report.history;
            return d;
        },
        py::arg("seed") = 5);
}
