#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ceesim/video.hpp"

namespace ceesim::codec {

/// Intra-only block-transform video coder standing in for H.264 as the
/// baseline source coder.
///
/// Layout: a header (magic "CSB1", geometry, quantizer, canonical Huffman code
/// lengths for DC and AC symbols, per-macroblock byte lengths, CRC-32) followed
/// by one byte-aligned record per 16x16 macroblock. A record holds, for each
/// color channel, four 8x8 orthonormal DCT blocks quantized with a uniform
/// step `qp` (on the 0..255 sample scale), zigzag scanned and run-length coded
/// with JPEG-style (run, size) symbols, then a CRC-16 over the record.
/// Macroblocks are self-contained, so a damaged record is detected and
/// concealed without disturbing its neighbours.

inline constexpr int kMacroblock = 16;

struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    bool overlaps(const ByteRange& o) const { return begin < o.end && o.begin < end; }
};

struct Bitstream {
    std::vector<std::uint8_t> bytes;
    /// Byte range of every macroblock record, frame-major then raster order.
    std::vector<ByteRange> block_map;
    std::size_t header_bytes = 0;

    std::size_t bit_count() const { return bytes.size() * 8; }
};

struct FrameDims {
    int width = 0;
    int height = 0;
    int frames = 0;
};

/// Thrown when the bitstream header cannot be trusted.
class HeaderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bitstream source_encode(const Gop& gop, double qp);

struct DecodedGop {
    Gop gop;
    /// Indices into the block_map of concealed macroblocks.
    std::vector<std::size_t> concealed;
};

/// Decodes a GOP. Macroblocks overlapping any of `damaged`, failing their
/// CRC, or failing to parse are replaced with the co-located macroblock of the
/// previous decoded frame (mid-gray in the first frame).
DecodedGop source_decode(const Bitstream& bs, const FrameDims& dims, std::span<const ByteRange> damaged = {});

/// Parses only the header, returning macroblock ranges. Throws HeaderError.
Bitstream parse_layout(std::span<const std::uint8_t> bytes);

/// Raw 8-bit size of a GOP divided by its coded size.
double compression_ratio(const Gop& gop, const Bitstream& bs);

}  // namespace ceesim::codec
