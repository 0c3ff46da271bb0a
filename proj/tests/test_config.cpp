#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ceesim/config.hpp"

using namespace ceesim;
using namespace ceesim::config;

TEST_CASE("config round trip through json") {
    RunConfig cfg;
    cfg.seed = 42;
    cfg.snr_db = -3.5;
    cfg.sweep_db = {-10, 0, 10};
    cfg.budget = {BudgetMode::Fraction, 0.3};
    cfg.vsr.enabled = false;
    cfg.vsr.fit.iterations = 17;
    cfg.edge.compute_capacity = 5e13;
    cfg.downlink.throughput = 1e6;
    cfg.ldpc.seed = 9;
    const auto back = from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(back.seed == 42);
    CHECK(back.budget.mode == BudgetMode::Fraction);
    CHECK(back.vsr.fit.iterations == 17);
    CHECK(back.downlink.throughput == 1e6);
}

TEST_CASE("config files resolve relative input paths") {
    const auto dir = std::filesystem::temp_directory_path() / "ceesim_config_test";
    std::filesystem::create_directories(dir);
    RunConfig cfg;
    cfg.user_video = "clips/user";
    save_config(cfg, dir / "run.json");
    const auto back = load_config(dir / "run.json");
    CHECK(std::filesystem::path(back.user_video) == dir / "clips/user");
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_config(dir / "missing.json"));
}

TEST_CASE("partial config files keep defaults") {
    const auto back = from_json(nlohmann::json::parse(R"({"seed": 7, "channel": {"snr_db": 12}})"));
    CHECK(back.seed == 7);
    CHECK(back.snr_db == 12.0);
    CHECK(back.gop_size == RunConfig{}.gop_size);
    CHECK(back.budget.value == RunConfig{}.budget.value);
}

TEST_CASE("validation") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.gop_size = 0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.uplink.throughput = 0.0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.cloud.compute_capacity = -1.0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.snr_db = std::numeric_limits<double>::infinity();
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.budget = {BudgetMode::Fraction, 1.5};
    CHECK_THROWS(bad.validate());
    CHECK_THROWS(from_json(nlohmann::json::parse(R"({"semantic": {"budget": {"mode": "bogus"}}})")));
}
