#include "ceesim/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ceesim::channel {

double ChannelConfig::noise_variance() const {
    if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
    return std::pow(10.0, -snr_db / 10.0);
}

double SymbolBlock::power() const {
    if (symbols.empty()) return 0.0;
    double acc = 0.0;
    for (double s : symbols) acc += s * s;
    return acc / static_cast<double>(symbols.size());
}

Normalized normalize_power(const SymbolBlock& block) {
    if (block.symbols.empty()) throw std::invalid_argument("cannot normalize an empty symbol block");
    const double p = block.power();
    if (!(p > 0.0)) throw std::invalid_argument("cannot normalize an all-zero symbol block");
    const double scale = std::sqrt(p);
    Normalized out{block, scale};
    for (double& s : out.block.symbols) s /= scale;
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SymbolBlock awgn(const SymbolBlock& block, const ChannelConfig& cfg, std::uint64_t stream) {
    const double sigma = std::sqrt(cfg.noise_variance());
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(stream)));
    std::normal_distribution<double> noise(0.0, 1.0);
    SymbolBlock out = block;
    for (double& s : out.symbols) s += sigma * noise(rng);
    return out;
}

}  // namespace ceesim::channel
