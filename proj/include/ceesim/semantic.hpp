#pragma once

#include <cstdint>
#include <vector>

#include "ceesim/channel.hpp"
#include "ceesim/tx_stats.hpp"
#include "ceesim/video.hpp"

namespace ceesim::semantic {

/// Deterministic analogue of a learned video JSCC codec:
///
///   frames -> latent (orthonormal color rotation + block DCT)
///          -> features (frequency-ordered channels, fixed scale, dyadic grid)
///          -> common map (per-element GOP mean) + per-frame residual maps
///          -> factorized Laplace entropy model
///          -> element selection under a symbol budget
///          -> analog real-valued symbols over the channel
///          -> per-symbol LMMSE, refill, inverse chain.

struct SemanticSettings {
    /// Spatial block edge of the latent transform. 3*b*b must not exceed
    /// channel_dim; unused channels stay zero.
    int block_size = 6;
    int channel_dim = 128;
    /// Quantization bin (feature units) used by the entropy model.
    double entropy_step = 1.0 / 64.0;
    /// Lower bound on the Laplace scale of a channel.
    double scale_floor = 1e-6;
    /// Bit-equivalents charged per transmitted analog symbol.
    double bits_per_symbol = 32.0;
    /// Exponent of the per-channel power allocation gain (variance^exponent).
    double power_exponent = -0.25;
};

/// Dense [frame][channel][row][col] tensor.
struct FeatureTensor {
    int frames = 0;
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    FeatureTensor() = default;
    FeatureTensor(int f, int c, int r, int k);

    std::size_t plane() const { return static_cast<std::size_t>(rows) * cols; }
    std::size_t frame_size() const { return plane() * channels; }
    double& at(int f, int c, int r, int k) { return data[f * frame_size() + c * plane() + static_cast<std::size_t>(r) * cols + k]; }
    double at(int f, int c, int r, int k) const { return data[f * frame_size() + c * plane() + static_cast<std::size_t>(r) * cols + k]; }
};

struct LatentRep {
    FeatureTensor tensor;
    int width = 0;   // original frame size
    int height = 0;
    int block_size = 0;
};

/// Color rotation plus block DCT. Frames are edge-padded to a multiple of
/// the block size; the padding is dropped again by latent_inverse.
LatentRep latent_transform(const Gop& gop, const SemanticSettings& s = {});
Gop latent_inverse(const LatentRep& lat);

/// Spacing of the grid the feature maps live on (2^-40).
double feature_grid();

/// Reorders latent channels by spatial frequency, applies a fixed scale and
/// snaps to the feature grid. Inverse to within 1e-9.
FeatureTensor jscc_encode(const LatentRep& lat);
LatentRep jscc_decode(const FeatureTensor& features, const LatentRep& geometry);

struct FeatureMaps {
    /// One frame's worth of elements: [channel][row][col].
    std::vector<double> common;
    std::vector<std::vector<double>> individual;
    int channels = 0;
    int rows = 0;
    int cols = 0;

    std::size_t gop_size() const { return individual.size(); }
    std::size_t map_size() const { return common.size(); }
    std::size_t total_elements() const { return map_size() * (1 + gop_size()); }
};

/// Common map = per-element mean over the GOP (snapped to the feature grid);
/// individual maps = features minus common. Both live on the grid, so
/// common + individual reproduces the input exactly.
FeatureMaps extract_common(const FeatureTensor& y);
FeatureTensor combine_common(const FeatureMaps& w);

enum class MapKind { Common = 0, Individual = 1 };

struct EntropyModel {
    /// Indexed [kind][channel].
    std::vector<double> location[2];
    std::vector<double> scale[2];
    double step = 1.0 / 64.0;

    double variance(MapKind kind, int channel) const {
        const double b = scale[static_cast<int>(kind)][channel];
        return 2.0 * b * b;
    }
};

/// Laplace location/scale per (map kind, channel), fitted by moments.
EntropyModel fit_entropy_model(const FeatureMaps& w, const SemanticSettings& s = {});

/// Probability mass of the quantization bin around each element, in the
/// element order used by FeatureMaps: common map first, then each individual map.
std::vector<double> likelihood(const FeatureMaps& w, const EntropyModel& model);

struct SemanticPacket {
    /// One flag per element (common map first, then individual maps).
    std::vector<std::uint8_t> mask;
    channel::SymbolBlock symbols;
    /// Normalization applied before transmission: sent = raw / scale.
    double power_scale = 1.0;
    EntropyModel model;
    /// Mean power of kept symbols per [kind][channel] after normalization.
    std::vector<double> symbol_power[2];
    int channels = 0;
    int rows = 0;
    int cols = 0;
    int gop_size = 0;

    std::size_t kept() const { return symbols.symbols.size(); }
    /// Error-free side information: mask, entropy model, symbol powers, scale, geometry.
    double side_info_bits() const;
};

/// Keeps the `symbol_budget` most informative elements (-log2 em), all common
/// elements ranked ahead of individual ones, and turns them into unit-power
/// analog symbols.
SemanticPacket variable_length_code(const FeatureMaps& w, const std::vector<double>& em, const EntropyModel& model,
                                    std::size_t symbol_budget, const SemanticSettings& s = {});

/// Receiver side: per-symbol LMMSE scaling for the given noise variance,
/// dropped elements refilled with the entropy-model location.
FeatureMaps reconstruct_features(const SemanticPacket& packet, const channel::SymbolBlock& received,
                                 double noise_variance, const SemanticSettings& s = {});

struct SemanticResult {
    Gop gop;
    TxStats stats;
};

/// Full chain for one GOP.
SemanticResult semantic_transmit(const Gop& gop, const channel::ChannelConfig& ch, std::size_t symbol_budget,
                                 const SemanticSettings& s = {}, std::uint64_t stream = 0);

/// Number of feature elements (common + individual) a GOP produces.
std::size_t element_count(const Gop& gop, const SemanticSettings& s = {});

/// Element indices in transmission priority order (see variable_length_code).
std::vector<std::size_t> selection_order(const FeatureMaps& w, const std::vector<double>& em);

/// Largest budget whose payload (symbols plus side information) fits in
/// `target_bits` for this GOP; at least 1.
std::size_t budget_for_payload(const Gop& gop, double target_bits, const SemanticSettings& s = {});

}  // namespace ceesim::semantic
