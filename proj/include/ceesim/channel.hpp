#pragma once

#include <cstdint>
#include <vector>

namespace ceesim::channel {

enum class ChannelKind { Awgn };

/// Real-valued baseband channel. SNR is per channel symbol (Es/N0 for unit
/// symbol power) for every chain that uses it.
struct ChannelConfig {
    double snr_db = 10.0;
    ChannelKind kind = ChannelKind::Awgn;
    std::uint64_t seed = 1;

    /// Noise variance for unit-power symbols: 10^(-snr_db/10).
    double noise_variance() const;
};

struct SymbolBlock {
    std::vector<double> symbols;

    double power() const;
};

struct Normalized {
    SymbolBlock block;
    /// Original RMS amplitude: input = block * scale.
    double scale = 1.0;
};

/// Scales a block to unit mean-square power.
Normalized normalize_power(const SymbolBlock& block);

/// Adds white Gaussian noise with variance 10^(-snr_db/10).
///
/// Noise comes from std::mt19937_64 seeded with splitmix64(cfg.seed ^ stream)
/// and std::normal_distribution<double>. `stream` separates independent
/// transmissions that share one configured seed.
SymbolBlock awgn(const SymbolBlock& block, const ChannelConfig& cfg, std::uint64_t stream = 0);

/// Hash used to derive per-transmission seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ceesim::channel
