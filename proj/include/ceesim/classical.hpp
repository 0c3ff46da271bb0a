#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ceesim/channel.hpp"
#include "ceesim/ldpc.hpp"
#include "ceesim/source_codec.hpp"
#include "ceesim/tx_stats.hpp"
#include "ceesim/video.hpp"

namespace ceesim::classical {

/// LLR magnitude used when the noise variance is zero.
inline constexpr double kMaxDemodLlr = 1e6;

/// Bit 0 maps to +1, bit 1 to -1.
channel::SymbolBlock bpsk_modulate(std::span<const std::uint8_t> bits);

/// LLR = 2y / sigma^2 (positive favours bit 0). A zero variance clamps the
/// magnitude to kMaxDemodLlr.
std::vector<double> bpsk_demodulate(std::span<const double> symbols, double noise_variance);

/// Hard decisions from LLRs.
std::vector<std::uint8_t> hard_decision(std::span<const double> llrs);

std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits);

struct ClassicalSettings {
    double qp = 16.0;
    int max_iters = 50;
};

struct ClassicalResult {
    Gop gop;
    TxStats stats;
};

/// Source coder, rate-1/2 LDPC, BPSK, AWGN, BP decoding, then source decoding
/// with concealment of macroblocks touched by failed LDPC blocks. If the
/// header is lost the whole GOP is concealed (mid-gray).
ClassicalResult classical_transmit(const Gop& gop, const channel::ChannelConfig& ch, const ClassicalSettings& settings,
                                   const ldpc::LdpcCode& code, std::uint64_t stream = 0);

/// Source coding only (channel bypassed).
Gop classical_reference(const Gop& gop, double qp);

}  // namespace ceesim::classical
