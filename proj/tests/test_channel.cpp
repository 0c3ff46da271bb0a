#include <doctest.h>

#include <cmath>

#include "ceesim/channel.hpp"

using namespace ceesim::channel;

namespace {

SymbolBlock bpsk_like(std::size_t n) {
    SymbolBlock b;
    for (std::size_t i = 0; i < n; ++i) b.symbols.push_back(i % 3 == 0 ? -1.0 : 1.0);
    return b;
}

}  // namespace

TEST_CASE("normalize_power examples") {
    SymbolBlock twos{{2, 2, 2, 2}};
    auto n = normalize_power(twos);
    CHECK(n.scale == doctest::Approx(2.0));
    for (double s : n.block.symbols) CHECK(s == doctest::Approx(1.0));

    SymbolBlock unit{{1, -1, 1, -1}};
    auto u = normalize_power(unit);
    CHECK(u.scale == doctest::Approx(1.0));
    CHECK(u.block.symbols == unit.symbols);

    SymbolBlock tf{{3, 4}};
    auto t = normalize_power(tf);
    CHECK(tf.power() == doctest::Approx(12.5));
    CHECK(std::abs(t.block.power() - 1.0) < 1e-6);
    CHECK(t.scale == doctest::Approx(std::sqrt(12.5)));

    CHECK_THROWS(normalize_power(SymbolBlock{{0, 0, 0}}));
    CHECK_THROWS(normalize_power(SymbolBlock{}));
}

TEST_CASE("awgn at very high SNR is transparent") {
    auto b = bpsk_like(1000);
    auto out = awgn(b, {200.0, ChannelKind::Awgn, 3});
    for (std::size_t i = 0; i < b.symbols.size(); ++i) CHECK(std::abs(out.symbols[i] - b.symbols[i]) < 1e-8);
}

TEST_CASE("awgn noise variance at 0 dB") {
    auto b = bpsk_like(1000000);
    auto out = awgn(b, {0.0, ChannelKind::Awgn, 9});
    double v = 0.0;
    for (std::size_t i = 0; i < b.symbols.size(); ++i) v += (out.symbols[i] - b.symbols[i]) * (out.symbols[i] - b.symbols[i]);
    v /= static_cast<double>(b.symbols.size());
    CHECK(std::abs(v - 1.0) < 0.02);
}

TEST_CASE("empirical SNR matches the configured SNR") {
    auto b = bpsk_like(1000000);
    for (double snr : {-10.0, 0.0, 7.0, 25.0}) {
        auto out = awgn(b, {snr, ChannelKind::Awgn, 4});
        double sig = 0.0, noise = 0.0;
        for (std::size_t i = 0; i < b.symbols.size(); ++i) {
            sig += b.symbols[i] * b.symbols[i];
            noise += (out.symbols[i] - b.symbols[i]) * (out.symbols[i] - b.symbols[i]);
        }
        CHECK(std::abs(10.0 * std::log10(sig / noise) - snr) < 0.1);
    }
}

TEST_CASE("awgn is deterministic per seed and stream") {
    auto b = bpsk_like(500);
    ChannelConfig cfg{3.0, ChannelKind::Awgn, 77};
    CHECK(awgn(b, cfg).symbols == awgn(b, cfg).symbols);
    CHECK(awgn(b, cfg, 1).symbols != awgn(b, cfg, 2).symbols);
    ChannelConfig other = cfg;
    other.seed = 78;
    CHECK(awgn(b, cfg).symbols != awgn(b, other).symbols);
}

TEST_CASE("noise variance follows the dB definition") {
    CHECK(ChannelConfig{10.0}.noise_variance() == doctest::Approx(0.1));
    CHECK(ChannelConfig{-10.0}.noise_variance() == doctest::Approx(10.0));
    CHECK_THROWS(ChannelConfig{std::nan("")}.noise_variance());
}
