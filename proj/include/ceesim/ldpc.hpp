#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ceesim::ldpc {

struct LdpcParams {
    /// Information bits per block; the code length is 2k.
    int k = 512;
    /// Ones per column of H. Rows carry twice as many (regular (dv, 2dv)).
    int column_degree = 3;
    std::uint64_t seed = 0x1dbc;
};

/// Rate-1/2 regular LDPC code built by a seeded socket permutation
/// (Gallager-style random construction), with edge swaps that remove
/// length-4 cycles and repair row-rank deficiencies.
class LdpcCode {
public:
    static LdpcCode build(const LdpcParams& params);

    int k() const { return k_; }
    int n() const { return n_; }
    int m() const { return n_ - k_; }
    const LdpcParams& params() const { return params_; }

    /// Variable indices of each check (row of H).
    const std::vector<std::vector<int>>& rows() const { return rows_; }
    /// Check indices of each variable (column of H).
    const std::vector<std::vector<int>>& columns() const { return columns_; }

    /// True if H has no pair of columns sharing two rows.
    bool girth_at_least_six() const;
    /// Rank of H over GF(2).
    int rank() const;

    /// Systematic encoding of exactly k bits.
    std::vector<std::uint8_t> encode_block(std::span<const std::uint8_t> info) const;
    bool satisfies_parity(std::span<const std::uint8_t> codeword) const;
    std::vector<std::uint8_t> extract_info(std::span<const std::uint8_t> codeword) const;

    /// Codeword positions carrying the information bits, in order.
    const std::vector<int>& info_positions() const { return info_positions_; }

private:
    LdpcCode() = default;
    void prepare_encoder();

    LdpcParams params_;
    int k_ = 0;
    int n_ = 0;
    std::vector<std::vector<int>> rows_;
    std::vector<std::vector<int>> columns_;
    std::vector<int> info_positions_;
    std::vector<int> parity_positions_;
    // Row r: parity bit at parity_positions_[r] = XOR of info bits selected by
    // parity_masks_[r] (packed 64 bits per word over the info index).
    std::vector<std::vector<std::uint64_t>> parity_masks_;
};

struct Encoded {
    std::vector<std::uint8_t> bits;
    /// Zero bits appended to reach a multiple of k.
    std::size_t pad = 0;
};

/// Encodes any number of bits; the tail is zero-padded to a multiple of k.
Encoded ldpc_encode(std::span<const std::uint8_t> info_bits, const LdpcCode& code);

struct Decoded {
    /// Information bits, k per block (padding included).
    std::vector<std::uint8_t> bits;
    std::vector<bool> block_converged;
    std::vector<int> block_iterations;

    bool converged() const;
    std::size_t failed_blocks() const;
};

/// Sum-product belief propagation over every n-bit block. LLR sign convention:
/// positive favours bit 0. Blocks that do not satisfy all checks within
/// `max_iters` return the final hard decision with converged = false.
Decoded ldpc_decode(std::span<const double> llrs, const LdpcCode& code, int max_iters = 50);

}  // namespace ceesim::ldpc
