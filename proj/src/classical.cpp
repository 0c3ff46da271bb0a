#include "ceesim/classical.hpp"

#include <algorithm>
#include <stdexcept>

namespace ceesim::classical {

channel::SymbolBlock bpsk_modulate(std::span<const std::uint8_t> bits) {
    channel::SymbolBlock block;
    block.symbols.reserve(bits.size());
    for (auto b : bits) block.symbols.push_back((b & 1U) ? -1.0 : 1.0);
    return block;
}

std::vector<double> bpsk_demodulate(std::span<const double> symbols, double noise_variance) {
    if (noise_variance < 0.0) throw std::invalid_argument("noise variance must be non-negative");
    std::vector<double> llr(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (noise_variance == 0.0) {
            llr[i] = symbols[i] > 0.0 ? kMaxDemodLlr : (symbols[i] < 0.0 ? -kMaxDemodLlr : 0.0);
        } else {
            llr[i] = std::clamp(2.0 * symbols[i] / noise_variance, -kMaxDemodLlr, kMaxDemodLlr);
        }
    }
    return llr;
}

std::vector<std::uint8_t> hard_decision(std::span<const double> llrs) {
    std::vector<std::uint8_t> bits(llrs.size());
    for (std::size_t i = 0; i < llrs.size(); ++i) bits[i] = llrs[i] < 0.0 ? 1 : 0;
    return bits;
}

std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (auto byte : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((byte >> i) & 1U);
    return bits;
}

std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i] & 1U) bytes[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
    return bytes;
}

ClassicalResult classical_transmit(const Gop& gop, const channel::ChannelConfig& ch, const ClassicalSettings& settings,
                                   const ldpc::LdpcCode& code, std::uint64_t stream) {
    const codec::Bitstream bs = codec::source_encode(gop, settings.qp);
    const auto source_bits = bytes_to_bits(bs.bytes);
    const auto encoded = ldpc::ldpc_encode(source_bits, code);
    const auto tx = bpsk_modulate(encoded.bits);
    const auto rx = channel::awgn(tx, ch, stream);
    const auto llr = bpsk_demodulate(rx.symbols, ch.noise_variance());
    const auto decoded = ldpc::ldpc_decode(llr, code, settings.max_iters);

    std::vector<std::uint8_t> bits(decoded.bits.begin(), decoded.bits.begin() + static_cast<std::ptrdiff_t>(source_bits.size()));
    const auto bytes = bits_to_bytes(bits);

    std::vector<codec::ByteRange> damaged;
    const std::size_t k = static_cast<std::size_t>(code.k());
    for (std::size_t b = 0; b < decoded.block_converged.size(); ++b) {
        if (decoded.block_converged[b]) continue;
        const std::size_t first_bit = b * k;
        const std::size_t last_bit = std::min(source_bits.size(), (b + 1) * k);
        if (first_bit >= last_bit) continue;
        damaged.push_back({first_bit / 8, (last_bit + 7) / 8});
    }

    TxStats stats;
    stats.channel_symbols = tx.symbols.size();
    stats.payload_bits = static_cast<double>(encoded.bits.size());
    stats.decode_failures = decoded.failed_blocks();

    const codec::FrameDims dims{gop.width(), gop.height(), static_cast<int>(gop.size())};
    codec::Bitstream received;
    received.bytes = bytes;
    try {
        auto out = codec::source_decode(received, dims, damaged);
        stats.concealed_blocks = out.concealed.size();
        return {std::move(out.gop), stats};
    } catch (const codec::HeaderError&) {
        stats.concealed_blocks = bs.block_map.size();
        std::vector<Frame> gray(gop.size(), Frame(gop.width(), gop.height(), 0.5));
        return {Gop(std::move(gray)), stats};
    }
}

Gop classical_reference(const Gop& gop, double qp) {
    const auto bs = codec::source_encode(gop, qp);
    return codec::source_decode(bs, {gop.width(), gop.height(), static_cast<int>(gop.size())}).gop;
}

}  // namespace ceesim::classical
