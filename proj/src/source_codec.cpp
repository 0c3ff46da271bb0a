#include "ceesim/source_codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <string>

#include <boost/crc.hpp>

namespace ceesim::codec {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'C', 'S', 'B', '1'};
constexpr int kDcSymbols = 16;
constexpr int kAcSymbols = 256;
constexpr int kMaxCodeLength = 24;
constexpr std::uint8_t kEob = 0x00;
constexpr std::uint8_t kZrl = 0xF0;

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

using Block = std::array<double, 64>;

const std::array<std::array<double, 8>, 8>& dct_matrix() {
    static const auto m = [] {
        std::array<std::array<double, 8>, 8> c{};
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x)
                c[u][x] = (u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0)) *
                          std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        return c;
    }();
    return m;
}

Block forward_dct(const Block& in) {
    const auto& c = dct_matrix();
    Block tmp{}, out{};
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += c[u][x] * in[y * 8 + x];
            tmp[y * 8 + u] = acc;
        }
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += c[v][y] * tmp[y * 8 + u];
            out[v * 8 + u] = acc;
        }
    return out;
}

Block inverse_dct(const Block& in) {
    const auto& c = dct_matrix();
    Block tmp{}, out{};
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) acc += c[u][x] * in[v * 8 + u];
            tmp[v * 8 + x] = acc;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) acc += c[v][y] * tmp[v * 8 + x];
            out[y * 8 + x] = acc;
        }
    return out;
}

int size_category(int value) {
    return value == 0 ? 0 : std::bit_width(static_cast<unsigned>(std::abs(value)));
}

// JPEG amplitude bits: positive values verbatim, negatives as one's complement.
unsigned amplitude_bits(int value, int size) {
    return value >= 0 ? static_cast<unsigned>(value)
                      : static_cast<unsigned>(value + (1 << size) - 1);
}

int amplitude_value(unsigned bits, int size) {
    if (size == 0) return 0;
    return (bits >> (size - 1)) ? static_cast<int>(bits) : static_cast<int>(bits) - (1 << size) + 1;
}

class BitWriter {
public:
    void put(std::uint32_t bits, int count) {
        for (int i = count - 1; i >= 0; --i) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((bits >> i) & 1U));
            if (++fill_ == 8) {
                bytes_.push_back(acc_);
                acc_ = 0;
                fill_ = 0;
            }
        }
    }
    void align() {
        if (fill_ > 0) put(0, 8 - fill_);
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint8_t acc_ = 0;
    int fill_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}
    std::optional<std::uint32_t> get(int count) {
        std::uint32_t v = 0;
        for (int i = 0; i < count; ++i) {
            if (pos_ >= data_.size() * 8) return std::nullopt;
            v = (v << 1) | ((data_[pos_ / 8] >> (7 - pos_ % 8)) & 1U);
            ++pos_;
        }
        return v;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Canonical prefix code from code lengths.
struct Huffman {
    std::vector<std::uint8_t> lengths;
    std::vector<std::uint32_t> codes;
    // Decoding tables indexed by code length.
    std::array<std::int64_t, kMaxCodeLength + 1> first_code{};
    std::array<int, kMaxCodeLength + 1> count{};
    std::array<int, kMaxCodeLength + 1> offset{};
    std::vector<int> sorted_symbols;

    static Huffman from_lengths(std::vector<std::uint8_t> lengths) {
        Huffman h;
        h.lengths = std::move(lengths);
        h.codes.assign(h.lengths.size(), 0);
        for (std::size_t s = 0; s < h.lengths.size(); ++s) {
            if (h.lengths[s] > kMaxCodeLength) throw HeaderError("Huffman code length out of range");
            if (h.lengths[s] > 0) ++h.count[h.lengths[s]];
        }
        std::int64_t code = 0;
        int off = 0;
        for (int len = 1; len <= kMaxCodeLength; ++len) {
            h.first_code[len] = code;
            h.offset[len] = off;
            off += h.count[len];
            code = (code + h.count[len]) << 1;
        }
        // Kraft check: codes must not overflow their length.
        for (int len = 1; len <= kMaxCodeLength; ++len)
            if (h.first_code[len] + h.count[len] > (std::int64_t{1} << len))
                throw HeaderError("Huffman code lengths violate the Kraft inequality");
        h.sorted_symbols.resize(off);
        std::array<int, kMaxCodeLength + 1> next{};
        for (int len = 1; len <= kMaxCodeLength; ++len)
            for (std::size_t s = 0; s < h.lengths.size(); ++s)
                if (h.lengths[s] == len) {
                    h.codes[s] = static_cast<std::uint32_t>(h.first_code[len] + next[len]);
                    h.sorted_symbols[h.offset[len] + next[len]] = static_cast<int>(s);
                    ++next[len];
                }
        return h;
    }

    void write(BitWriter& w, int symbol) const {
        if (lengths[symbol] == 0) throw std::logic_error("symbol missing from Huffman table");
        w.put(codes[symbol], lengths[symbol]);
    }

    std::optional<int> read(BitReader& r) const {
        std::int64_t code = 0;
        for (int len = 1; len <= kMaxCodeLength; ++len) {
            const auto bit = r.get(1);
            if (!bit) return std::nullopt;
            code = (code << 1) | *bit;
            const std::int64_t idx = code - first_code[len];
            if (count[len] > 0 && idx >= 0 && idx < count[len]) return sorted_symbols[offset[len] + idx];
        }
        return std::nullopt;
    }
};

// Huffman code lengths with a deterministic tie-break, limited to
// kMaxCodeLength by repeatedly flattening the histogram.
std::vector<std::uint8_t> huffman_lengths(std::vector<std::uint64_t> freq) {
    const std::size_t n = freq.size();
    for (;;) {
        std::vector<std::uint8_t> lengths(n, 0);
        std::vector<std::size_t> used;
        for (std::size_t s = 0; s < n; ++s)
            if (freq[s] > 0) used.push_back(s);
        if (used.empty()) return lengths;
        if (used.size() == 1) {
            lengths[used[0]] = 1;
            return lengths;
        }
        struct Node {
            std::uint64_t weight;
            std::size_t id;
        };
        auto cmp = [](const Node& a, const Node& b) {
            return a.weight != b.weight ? a.weight > b.weight : a.id > b.id;
        };
        std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
        std::vector<std::size_t> parent(2 * n, 0);
        std::size_t next_id = n;
        for (std::size_t s : used) heap.push({freq[s], s});
        while (heap.size() > 1) {
            const Node a = heap.top();
            heap.pop();
            const Node b = heap.top();
            heap.pop();
            parent[a.id] = next_id;
            parent[b.id] = next_id;
            heap.push({a.weight + b.weight, next_id});
            ++next_id;
        }
        const std::size_t root = next_id - 1;
        bool fits = true;
        for (std::size_t s : used) {
            int depth = 0;
            for (std::size_t id = s; id != root; id = parent[id]) ++depth;
            if (depth > kMaxCodeLength) fits = false;
            lengths[s] = static_cast<std::uint8_t>(depth);
        }
        if (fits) return lengths;
        for (auto& f : freq)
            if (f > 0) f = (f + 1) / 2;
    }
}

struct Symbol {
    bool dc;
    std::uint8_t value;
    std::uint32_t extra;
    int extra_len;
};

// Run-length symbols of one quantized block (zigzag order).
void block_symbols(const std::array<int, 64>& q, std::vector<Symbol>& out) {
    const int dc_size = size_category(q[0]);
    if (dc_size > 15) throw std::runtime_error("DC coefficient exceeds coder range; increase qp");
    out.push_back({true, static_cast<std::uint8_t>(dc_size), amplitude_bits(q[0], dc_size), dc_size});
    int last = 63;
    while (last > 0 && q[kZigzag[last]] == 0) --last;
    int run = 0;
    for (int i = 1; i <= last; ++i) {
        const int v = q[kZigzag[i]];
        if (v == 0) {
            ++run;
            continue;
        }
        while (run > 15) {
            out.push_back({false, kZrl, 0, 0});
            run -= 16;
        }
        const int size = size_category(v);
        if (size > 15) throw std::runtime_error("AC coefficient exceeds coder range; increase qp");
        out.push_back({false, static_cast<std::uint8_t>((run << 4) | size), amplitude_bits(v, size), size});
        run = 0;
    }
    if (last < 63) out.push_back({false, kEob, 0, 0});
}

struct Geometry {
    int width;
    int height;
    int frames;
    int mb_cols;
    int mb_rows;
    std::size_t mb_per_frame() const { return static_cast<std::size_t>(mb_cols) * mb_rows; }
};

Geometry geometry(int width, int height, int frames) {
    return {width, height, frames, (width + kMacroblock - 1) / kMacroblock, (height + kMacroblock - 1) / kMacroblock};
}

// Quantized coefficients of the 12 blocks (3 channels x 4) of one macroblock.
std::vector<std::array<int, 64>> quantize_macroblock(const Frame& f, int mbx, int mby, double qp) {
    std::vector<std::array<int, 64>> blocks;
    for (int c = 0; c < 3; ++c)
        for (int sub = 0; sub < 4; ++sub) {
            const int bx = mbx * kMacroblock + (sub % 2) * 8;
            const int by = mby * kMacroblock + (sub / 2) * 8;
            Block px{};
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sx = std::min(bx + x, f.width() - 1);
                    const int sy = std::min(by + y, f.height() - 1);
                    px[y * 8 + x] = f.at(sx, sy, c) * 255.0 - 128.0;
                }
            const Block coef = forward_dct(px);
            std::array<int, 64> q{};
            for (int i = 0; i < 64; ++i) q[i] = static_cast<int>(std::lround(coef[i] / qp));
            blocks.push_back(q);
        }
    return blocks;
}

void put_u16(std::vector<std::uint8_t>& b, unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xFF));
}
void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    put_u16(b, v >> 16);
    put_u16(b, v & 0xFFFF);
}
std::uint32_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return (static_cast<std::uint32_t>(b[at]) << 8) | b[at + 1];
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return (get_u16(b, at) << 16) | get_u16(b, at + 2);
}

std::uint16_t crc16(std::span<const std::uint8_t> data) {
    boost::crc_ccitt_type crc;
    crc.process_bytes(data.data(), data.size());
    return static_cast<std::uint16_t>(crc.checksum());
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

struct Header {
    Geometry geo;
    double qp;
    Huffman dc;
    Huffman ac;
    std::vector<ByteRange> ranges;
    std::size_t header_bytes;
};

constexpr std::size_t kFixedHeader = 4 + 2 + 2 + 2 + 4 + kDcSymbols + kAcSymbols + 4;

Header parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw HeaderError("empty bitstream");
    if (bytes.size() < kFixedHeader + 4) throw HeaderError("bitstream shorter than its header");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw HeaderError("bad bitstream magic");
    const std::size_t mb_count = get_u32(bytes, kFixedHeader - 4);
    const std::size_t header_bytes = kFixedHeader + 2 * mb_count + 4;
    if (bytes.size() < header_bytes) throw HeaderError("truncated macroblock table");
    if (crc32(bytes.first(header_bytes - 4)) != get_u32(bytes, header_bytes - 4))
        throw HeaderError("header checksum mismatch");

    Header h{};
    const int width = static_cast<int>(get_u16(bytes, 4));
    const int height = static_cast<int>(get_u16(bytes, 6));
    const int frames = static_cast<int>(get_u16(bytes, 8));
    if (width == 0 || height == 0 || frames == 0) throw HeaderError("header has zero geometry");
    h.geo = geometry(width, height, frames);
    if (h.geo.mb_per_frame() * frames != mb_count) throw HeaderError("macroblock count disagrees with geometry");
    const std::uint32_t qp_bits = get_u32(bytes, 10);
    float qp = 0.0f;
    std::memcpy(&qp, &qp_bits, sizeof qp);
    h.qp = qp;
    if (!(h.qp > 0.0)) throw HeaderError("non-positive quantizer in header");
    std::vector<std::uint8_t> dc_len(bytes.begin() + 14, bytes.begin() + 14 + kDcSymbols);
    std::vector<std::uint8_t> ac_len(bytes.begin() + 14 + kDcSymbols, bytes.begin() + 14 + kDcSymbols + kAcSymbols);
    h.dc = Huffman::from_lengths(std::move(dc_len));
    h.ac = Huffman::from_lengths(std::move(ac_len));
    std::size_t pos = header_bytes;
    for (std::size_t i = 0; i < mb_count; ++i) {
        const std::size_t len = get_u16(bytes, kFixedHeader + 2 * i);
        h.ranges.push_back({pos, pos + len});
        pos += len;
    }
    if (pos != bytes.size()) throw HeaderError("macroblock table does not cover the payload");
    h.header_bytes = header_bytes;
    return h;
}

// Decodes one macroblock record; std::nullopt when it is damaged.
std::optional<std::vector<Block>> decode_macroblock(std::span<const std::uint8_t> record, const Header& h) {
    if (record.size() < 2) return std::nullopt;
    const auto body = record.first(record.size() - 2);
    if (crc16(body) != get_u16(record, record.size() - 2)) return std::nullopt;
    BitReader r(body);
    std::vector<Block> blocks;
    for (int b = 0; b < 12; ++b) {
        std::array<int, 64> q{};
        const auto dc_size = h.dc.read(r);
        if (!dc_size) return std::nullopt;
        const auto dc_bits = r.get(*dc_size);
        if (!dc_bits) return std::nullopt;
        q[0] = amplitude_value(*dc_bits, *dc_size);
        int idx = 1;
        while (idx < 64) {
            const auto sym = h.ac.read(r);
            if (!sym) return std::nullopt;
            if (*sym == kEob) break;
            if (*sym == kZrl) {
                idx += 16;
                continue;
            }
            const int run = *sym >> 4;
            const int size = *sym & 0xF;
            if (size == 0) return std::nullopt;
            idx += run;
            if (idx > 63) return std::nullopt;
            const auto bits = r.get(size);
            if (!bits) return std::nullopt;
            q[kZigzag[idx]] = amplitude_value(*bits, size);
            ++idx;
        }
        if (idx > 64) return std::nullopt;
        Block coef{};
        for (int i = 0; i < 64; ++i) coef[i] = q[i] * h.qp;
        blocks.push_back(inverse_dct(coef));
    }
    return blocks;
}

}  // namespace

Bitstream source_encode(const Gop& gop, double qp) {
    if (!(qp > 0.0)) throw std::invalid_argument("qp must be positive");
    const Geometry geo = geometry(gop.width(), gop.height(), static_cast<int>(gop.size()));
    if (geo.width > 0xFFFF || geo.height > 0xFFFF || geo.frames > 0xFFFF)
        throw std::invalid_argument("GOP too large for the bitstream header");

    std::vector<std::vector<Symbol>> mb_symbols;
    std::vector<std::uint64_t> dc_freq(kDcSymbols, 0), ac_freq(kAcSymbols, 0);
    for (const auto& frame : gop.frames())
        for (int mby = 0; mby < geo.mb_rows; ++mby)
            for (int mbx = 0; mbx < geo.mb_cols; ++mbx) {
                std::vector<Symbol> syms;
                for (const auto& q : quantize_macroblock(frame, mbx, mby, qp)) block_symbols(q, syms);
                for (const auto& s : syms) ++(s.dc ? dc_freq[s.value] : ac_freq[s.value]);
                mb_symbols.push_back(std::move(syms));
            }

    const Huffman dc = Huffman::from_lengths(huffman_lengths(dc_freq));
    const Huffman ac = Huffman::from_lengths(huffman_lengths(ac_freq));

    std::vector<std::vector<std::uint8_t>> records;
    for (const auto& syms : mb_symbols) {
        BitWriter w;
        for (const auto& s : syms) {
            (s.dc ? dc : ac).write(w, s.value);
            if (s.extra_len > 0) w.put(s.extra, s.extra_len);
        }
        w.align();
        auto rec = std::move(w.bytes());
        const std::uint16_t crc = crc16(rec);
        put_u16(rec, crc);
        if (rec.size() > 0xFFFF) throw std::runtime_error("macroblock record exceeds 64 KiB");
        records.push_back(std::move(rec));
    }

    Bitstream bs;
    auto& b = bs.bytes;
    b.insert(b.end(), kMagic.begin(), kMagic.end());
    put_u16(b, static_cast<unsigned>(geo.width));
    put_u16(b, static_cast<unsigned>(geo.height));
    put_u16(b, static_cast<unsigned>(geo.frames));
    const float qpf = static_cast<float>(qp);
    std::uint32_t qp_bits = 0;
    std::memcpy(&qp_bits, &qpf, sizeof qpf);
    put_u32(b, qp_bits);
    b.insert(b.end(), dc.lengths.begin(), dc.lengths.end());
    b.insert(b.end(), ac.lengths.begin(), ac.lengths.end());
    put_u32(b, static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) put_u16(b, static_cast<unsigned>(rec.size()));
    put_u32(b, crc32(b));
    bs.header_bytes = b.size();
    for (const auto& rec : records) {
        bs.block_map.push_back({b.size(), b.size() + rec.size()});
        b.insert(b.end(), rec.begin(), rec.end());
    }
    return bs;
}

Bitstream parse_layout(std::span<const std::uint8_t> bytes) {
    const Header h = parse_header(bytes);
    Bitstream bs;
    bs.bytes.assign(bytes.begin(), bytes.end());
    bs.block_map = h.ranges;
    bs.header_bytes = h.header_bytes;
    return bs;
}

DecodedGop source_decode(const Bitstream& bs, const FrameDims& dims, std::span<const ByteRange> damaged) {
    const Header h = parse_header(bs.bytes);
    if (h.geo.width != dims.width || h.geo.height != dims.height || h.geo.frames != dims.frames)
        throw HeaderError("bitstream geometry " + std::to_string(h.geo.width) + "x" + std::to_string(h.geo.height) +
                          "x" + std::to_string(h.geo.frames) + " does not match the expected dimensions");

    std::vector<Frame> frames;
    std::vector<std::size_t> concealed;
    std::size_t mb_index = 0;
    for (int f = 0; f < h.geo.frames; ++f) {
        Frame out(h.geo.width, h.geo.height, 0.5);
        for (int mby = 0; mby < h.geo.mb_rows; ++mby)
            for (int mbx = 0; mbx < h.geo.mb_cols; ++mbx, ++mb_index) {
                const ByteRange range = h.ranges[mb_index];
                const bool hit = std::any_of(damaged.begin(), damaged.end(),
                                             [&](const ByteRange& d) { return d.overlaps(range); });
                std::optional<std::vector<Block>> blocks;
                if (!hit)
                    blocks = decode_macroblock(std::span(bs.bytes).subspan(range.begin, range.end - range.begin), h);
                for (int c = 0; c < 3; ++c)
                    for (int sub = 0; sub < 4; ++sub) {
                        const int bx = mbx * kMacroblock + (sub % 2) * 8;
                        const int by = mby * kMacroblock + (sub / 2) * 8;
                        for (int y = 0; y < 8; ++y)
                            for (int x = 0; x < 8; ++x) {
                                const int px = bx + x;
                                const int py = by + y;
                                if (px >= h.geo.width || py >= h.geo.height) continue;
                                double v;
                                if (blocks)
                                    v = ((*blocks)[c * 4 + sub][y * 8 + x] + 128.0) / 255.0;
                                else
                                    v = frames.empty() ? 0.5 : frames.back().at(px, py, c);
                                out.at(px, py, c) = std::clamp(v, 0.0, 1.0);
                            }
                    }
                if (!blocks) concealed.push_back(mb_index);
            }
        frames.push_back(std::move(out));
    }
    return {Gop(std::move(frames)), std::move(concealed)};
}

double compression_ratio(const Gop& gop, const Bitstream& bs) {
    const double raw = static_cast<double>(gop.width()) * gop.height() * 3.0 * gop.size();
    return raw / static_cast<double>(bs.bytes.size());
}

}  // namespace ceesim::codec
