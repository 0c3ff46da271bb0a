#include "ceesim/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ceesim::ldpc {

namespace {

using BitRow = std::vector<std::uint64_t>;

struct Edge {
    int check;
    int var;
};

bool has_multi_edge(const std::vector<std::vector<int>>& rows) {
    for (const auto& r : rows) {
        auto sorted = r;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return true;
    }
    return false;
}

std::vector<std::vector<int>> columns_of(const std::vector<std::vector<int>>& rows, int n) {
    std::vector<std::vector<int>> cols(n);
    for (int c = 0; c < static_cast<int>(rows.size()); ++c)
        for (int v : rows[c]) cols[v].push_back(c);
    return cols;
}

// Checks taking part in a 4-cycle (two variables sharing two checks).
std::vector<int> checks_in_four_cycles(const std::vector<std::vector<int>>& rows, int n) {
    const auto cols = columns_of(rows, n);
    std::vector<int> bad;
    std::vector<int> seen_from(n, -1);
    std::vector<int> seen_check(n, -1);
    for (int v = 0; v < n; ++v) {
        for (int c : cols[v]) {
            for (int u : rows[c]) {
                if (u == v) continue;
                if (seen_from[u] == v && seen_check[u] != c) {
                    bad.push_back(c);
                    bad.push_back(seen_check[u]);
                }
                seen_from[u] = v;
                seen_check[u] = c;
            }
        }
    }
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    return bad;
}

std::vector<BitRow> dense_rows(const std::vector<std::vector<int>>& rows, int n) {
    const int words = (n + 63) / 64;
    std::vector<BitRow> dense(rows.size(), BitRow(words, 0));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int v : rows[r]) dense[r][v / 64] ^= (std::uint64_t{1} << (v % 64));
    return dense;
}

bool test_bit(const BitRow& row, int i) { return (row[i / 64] >> (i % 64)) & 1U; }

struct Elimination {
    std::vector<BitRow> reduced;   // only the pivot rows, in pivot order
    std::vector<int> pivots;       // pivot column of each reduced row
    std::vector<int> dependent;    // original rows that reduced to zero
};

// Gauss-Jordan elimination over GF(2). Rows are processed in order so the
// first dependent rows identified are the ones to repair.
Elimination eliminate(std::vector<BitRow> rows, int n) {
    Elimination out;
    const int words = (n + 63) / 64;
    std::vector<int> origin(rows.size());
    std::iota(origin.begin(), origin.end(), 0);
    std::size_t next = 0;
    for (int col = n - 1; col >= 0 && next < rows.size(); --col) {
        std::size_t sel = next;
        while (sel < rows.size() && !test_bit(rows[sel], col)) ++sel;
        if (sel == rows.size()) continue;
        std::swap(rows[sel], rows[next]);
        std::swap(origin[sel], origin[next]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r != next && test_bit(rows[r], col))
                for (int w = 0; w < words; ++w) rows[r][w] ^= rows[next][w];
        }
        out.pivots.push_back(col);
        ++next;
    }
    out.reduced.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(next));
    for (std::size_t r = next; r < rows.size(); ++r) out.dependent.push_back(origin[r]);
    return out;
}

// Swaps the variable ends of two edges if that keeps every row free of
// repeated variables.
bool try_swap(std::vector<std::vector<int>>& rows, int c1, int slot1, int c2, int slot2) {
    if (c1 == c2) return false;
    const int v1 = rows[c1][slot1];
    const int v2 = rows[c2][slot2];
    if (v1 == v2) return false;
    if (std::find(rows[c1].begin(), rows[c1].end(), v2) != rows[c1].end()) return false;
    if (std::find(rows[c2].begin(), rows[c2].end(), v1) != rows[c2].end()) return false;
    rows[c1][slot1] = v2;
    rows[c2][slot2] = v1;
    return true;
}

void random_swap_on(std::vector<std::vector<int>>& rows, int check, std::mt19937_64& rng) {
    const int m = static_cast<int>(rows.size());
    std::uniform_int_distribution<int> pick_check(0, m - 1);
    std::uniform_int_distribution<int> pick_slot(0, static_cast<int>(rows[check].size()) - 1);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int other = pick_check(rng);
        if (try_swap(rows, check, pick_slot(rng), other,
                     std::uniform_int_distribution<int>(0, static_cast<int>(rows[other].size()) - 1)(rng)))
            return;
    }
}

}  // namespace

LdpcCode LdpcCode::build(const LdpcParams& params) {
    if (params.k < 2) throw std::invalid_argument("LDPC k must be >= 2");
    if (params.column_degree < 2) throw std::invalid_argument("LDPC column degree must be >= 2");
    LdpcCode code;
    code.params_ = params;
    code.k_ = params.k;
    code.n_ = 2 * params.k;
    const int n = code.n_;
    const int m = code.n_ - code.k_;
    const int dv = params.column_degree;
    const int dc = 2 * dv;  // n*dv == m*dc for rate 1/2

    std::mt19937_64 rng(params.seed);

    // Socket permutation.
    std::vector<int> sockets;
    sockets.reserve(static_cast<std::size_t>(n) * dv);
    for (int v = 0; v < n; ++v)
        for (int d = 0; d < dv; ++d) sockets.push_back(v);
    std::shuffle(sockets.begin(), sockets.end(), rng);
    std::vector<std::vector<int>> rows(m);
    for (int c = 0; c < m; ++c) rows[c].assign(sockets.begin() + c * dc, sockets.begin() + (c + 1) * dc);

    constexpr int kMaxRounds = 20000;
    for (int round = 0;; ++round) {
        if (round == kMaxRounds) throw std::runtime_error("LDPC construction did not converge; try another seed");
        // Repeated variables inside a row.
        bool changed = false;
        for (int c = 0; c < m; ++c) {
            for (int s = 0; s < dc; ++s) {
                const int v = rows[c][s];
                if (std::count(rows[c].begin(), rows[c].end(), v) > 1) {
                    random_swap_on(rows, c, rng);
                    changed = true;
                }
            }
        }
        if (changed) continue;
        const auto bad = checks_in_four_cycles(rows, n);
        if (!bad.empty()) {
            for (int c : bad) random_swap_on(rows, c, rng);
            continue;
        }
        const auto elim = eliminate(dense_rows(rows, n), n);
        if (!elim.dependent.empty()) {
            random_swap_on(rows, elim.dependent.front(), rng);
            continue;
        }
        break;
    }
    if (has_multi_edge(rows)) throw std::logic_error("LDPC construction left a repeated edge");

    code.rows_ = std::move(rows);
    code.columns_ = columns_of(code.rows_, n);
    code.prepare_encoder();
    return code;
}

void LdpcCode::prepare_encoder() {
    const auto elim = eliminate(dense_rows(rows_, n_), n_);
    if (!elim.dependent.empty()) throw std::logic_error("parity-check matrix is rank deficient");
    std::vector<bool> is_pivot(n_, false);
    for (int p : elim.pivots) is_pivot[p] = true;
    info_positions_.clear();
    for (int i = 0; i < n_; ++i)
        if (!is_pivot[i]) info_positions_.push_back(i);
    parity_positions_ = elim.pivots;

    const int words = (k_ + 63) / 64;
    parity_masks_.assign(elim.reduced.size(), std::vector<std::uint64_t>(words, 0));
    for (std::size_t r = 0; r < elim.reduced.size(); ++r)
        for (int j = 0; j < k_; ++j)
            if (test_bit(elim.reduced[r], info_positions_[j])) parity_masks_[r][j / 64] |= std::uint64_t{1} << (j % 64);
}

bool LdpcCode::girth_at_least_six() const { return checks_in_four_cycles(rows_, n_).empty(); }

int LdpcCode::rank() const { return static_cast<int>(eliminate(dense_rows(rows_, n_), n_).pivots.size()); }

std::vector<std::uint8_t> LdpcCode::encode_block(std::span<const std::uint8_t> info) const {
    if (static_cast<int>(info.size()) != k_) throw std::invalid_argument("encode_block expects exactly k bits");
    const int words = (k_ + 63) / 64;
    std::vector<std::uint64_t> packed(words, 0);
    for (int j = 0; j < k_; ++j)
        if (info[j] & 1U) packed[j / 64] |= std::uint64_t{1} << (j % 64);

    std::vector<std::uint8_t> cw(n_, 0);
    for (int j = 0; j < k_; ++j) cw[info_positions_[j]] = info[j] & 1U;
    for (std::size_t r = 0; r < parity_masks_.size(); ++r) {
        int ones = 0;
        for (int w = 0; w < words; ++w) ones += std::popcount(parity_masks_[r][w] & packed[w]);
        cw[parity_positions_[r]] = static_cast<std::uint8_t>(ones & 1);
    }
    return cw;
}

bool LdpcCode::satisfies_parity(std::span<const std::uint8_t> codeword) const {
    if (static_cast<int>(codeword.size()) != n_) throw std::invalid_argument("codeword length must be n");
    for (const auto& row : rows_) {
        int acc = 0;
        for (int v : row) acc ^= codeword[v] & 1;
        if (acc) return false;
    }
    return true;
}

std::vector<std::uint8_t> LdpcCode::extract_info(std::span<const std::uint8_t> codeword) const {
    std::vector<std::uint8_t> info(k_);
    for (int j = 0; j < k_; ++j) info[j] = codeword[info_positions_[j]];
    return info;
}

Encoded ldpc_encode(std::span<const std::uint8_t> info_bits, const LdpcCode& code) {
    const std::size_t k = static_cast<std::size_t>(code.k());
    const std::size_t blocks = (info_bits.size() + k - 1) / k;
    Encoded out;
    out.pad = blocks * k - info_bits.size();
    out.bits.reserve(blocks * code.n());
    std::vector<std::uint8_t> block(k);
    for (std::size_t b = 0; b < blocks; ++b) {
        std::fill(block.begin(), block.end(), 0);
        const std::size_t start = b * k;
        const std::size_t len = std::min(k, info_bits.size() - start);
        std::copy_n(info_bits.begin() + static_cast<std::ptrdiff_t>(start), len, block.begin());
        const auto cw = code.encode_block(block);
        out.bits.insert(out.bits.end(), cw.begin(), cw.end());
    }
    return out;
}

bool Decoded::converged() const {
    return std::all_of(block_converged.begin(), block_converged.end(), [](bool b) { return b; });
}

std::size_t Decoded::failed_blocks() const {
    return static_cast<std::size_t>(std::count(block_converged.begin(), block_converged.end(), false));
}

namespace {

constexpr double kMaxLlr = 40.0;

class BpDecoder {
public:
    explicit BpDecoder(const LdpcCode& code) : code_(code) {
        const auto& rows = code.rows();
        row_start_.push_back(0);
        for (const auto& r : rows) {
            edge_var_.insert(edge_var_.end(), r.begin(), r.end());
            row_start_.push_back(static_cast<int>(edge_var_.size()));
        }
        var_edges_.assign(code.n(), {});
        for (int e = 0; e < static_cast<int>(edge_var_.size()); ++e) var_edges_[edge_var_[e]].push_back(e);
        v2c_.resize(edge_var_.size());
        c2v_.resize(edge_var_.size());
        total_.resize(code.n());
        hard_.resize(code.n());
    }

    // Returns the number of iterations used, or -1 if not converged.
    int run(std::span<const double> llr, int max_iters) {
        const int n = code_.n();
        for (int e = 0; e < static_cast<int>(edge_var_.size()); ++e) v2c_[e] = clampv(llr[edge_var_[e]]);
        std::vector<double> t;
        std::vector<double> prefix;
        for (int iter = 1; iter <= max_iters; ++iter) {
            for (std::size_t c = 0; c + 1 < row_start_.size(); ++c) {
                const int b = row_start_[c];
                const int deg = row_start_[c + 1] - b;
                t.resize(deg);
                prefix.resize(deg + 1);
                for (int j = 0; j < deg; ++j) t[j] = std::tanh(0.5 * v2c_[b + j]);
                prefix[0] = 1.0;
                for (int j = 0; j < deg; ++j) prefix[j + 1] = prefix[j] * t[j];
                double suffix = 1.0;
                for (int j = deg - 1; j >= 0; --j) {
                    const double p = std::clamp(prefix[j] * suffix, -0.999999999999, 0.999999999999);
                    c2v_[b + j] = clampv(2.0 * std::atanh(p));
                    suffix *= t[j];
                }
            }
            for (int v = 0; v < n; ++v) {
                double sum = llr[v];
                for (int e : var_edges_[v]) sum += c2v_[e];
                total_[v] = sum;
                hard_[v] = sum < 0.0 ? 1 : 0;
                for (int e : var_edges_[v]) v2c_[e] = clampv(sum - c2v_[e]);
            }
            if (syndrome_ok()) return iter;
        }
        return -1;
    }

    const std::vector<std::uint8_t>& hard() const { return hard_; }

private:
    static double clampv(double x) { return std::clamp(x, -kMaxLlr, kMaxLlr); }

    bool syndrome_ok() const {
        for (std::size_t c = 0; c + 1 < row_start_.size(); ++c) {
            int acc = 0;
            for (int e = row_start_[c]; e < row_start_[c + 1]; ++e) acc ^= hard_[edge_var_[e]];
            if (acc) return false;
        }
        return true;
    }

    const LdpcCode& code_;
    std::vector<int> row_start_;
    std::vector<int> edge_var_;
    std::vector<std::vector<int>> var_edges_;
    std::vector<double> v2c_;
    std::vector<double> c2v_;
    std::vector<double> total_;
    std::vector<std::uint8_t> hard_;
};

}  // namespace

Decoded ldpc_decode(std::span<const double> llrs, const LdpcCode& code, int max_iters) {
    const std::size_t n = static_cast<std::size_t>(code.n());
    if (llrs.size() % n != 0) throw std::invalid_argument("LLR count must be a multiple of the code length");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    const std::size_t blocks = llrs.size() / n;
    Decoded out;
    out.bits.reserve(blocks * code.k());
    BpDecoder dec(code);
    for (std::size_t b = 0; b < blocks; ++b) {
        const int iters = dec.run(llrs.subspan(b * n, n), max_iters);
        out.block_converged.push_back(iters > 0);
        out.block_iterations.push_back(iters > 0 ? iters : max_iters);
        const auto info = code.extract_info(dec.hard());
        out.bits.insert(out.bits.end(), info.begin(), info.end());
    }
    return out;
}

}  // namespace ceesim::ldpc
