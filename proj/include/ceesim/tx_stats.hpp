#pragma once

#include <cstddef>

namespace ceesim {

/// Accounting for one transmission over a wireless hop.
struct TxStats {
    /// Bits charged against link throughput (coded bits for the classical
    /// chain; symbol bit-equivalents plus side information for the semantic one).
    double payload_bits = 0.0;
    std::size_t channel_symbols = 0;
    /// Error-free side information included in payload_bits.
    double side_info_bits = 0.0;
    /// Filled in by the orchestrator from the link model.
    double wireless_delay_seconds = 0.0;
    std::size_t decode_failures = 0;
    std::size_t concealed_blocks = 0;

    TxStats& operator+=(const TxStats& o) {
        payload_bits += o.payload_bits;
        channel_symbols += o.channel_symbols;
        side_info_bits += o.side_info_bits;
        wireless_delay_seconds += o.wireless_delay_seconds;
        decode_failures += o.decode_failures;
        concealed_blocks += o.concealed_blocks;
        return *this;
    }
};

}  // namespace ceesim
