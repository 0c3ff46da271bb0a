#include "ceesim/semantic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace ceesim::semantic {

namespace {

// Orthonormal color rotation: luma-like sum, two opponent axes.
const std::array<std::array<double, 3>, 3>& color_matrix() {
    static const std::array<std::array<double, 3>, 3> m = {{
        {1.0 / std::numbers::sqrt3, 1.0 / std::numbers::sqrt3, 1.0 / std::numbers::sqrt3},
        {1.0 / std::numbers::sqrt2, 0.0, -1.0 / std::numbers::sqrt2},
        {1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0)},
    }};
    return m;
}

std::vector<double> dct_basis(int b) {
    std::vector<double> c(static_cast<std::size_t>(b) * b);
    for (int u = 0; u < b; ++u)
        for (int x = 0; x < b; ++x)
            c[u * b + x] = (u == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b)) *
                           std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * b));
    return c;
}

void check_settings(const SemanticSettings& s) {
    if (s.block_size < 1) throw std::invalid_argument("semantic block size must be >= 1");
    if (3 * s.block_size * s.block_size > s.channel_dim)
        throw std::invalid_argument("channel_dim must be at least 3 * block_size^2");
}

// Feature channel j carries latent channel order[j]: lowest spatial
// frequency first, color planes interleaved, unused channels last.
std::vector<int> frequency_order(int block, int channels) {
    const int active = 3 * block * block;
    std::vector<int> order(active);
    std::iota(order.begin(), order.end(), 0);
    auto key = [block](int c) {
        const int plane = c / (block * block);
        const int v = (c % (block * block)) / block;
        const int u = c % block;
        return std::make_tuple(u + v, plane, v, u);
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
    for (int c = active; c < channels; ++c) order.push_back(c);
    return order;
}

double snap(double v) {
    const double g = feature_grid();
    return std::round(v / g) * g;
}

double laplace_cdf(double x, double loc, double scale) {
    const double z = (x - loc) / scale;
    return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

constexpr double kMinLikelihood = 1e-300;

struct ElementRef {
    MapKind kind;
    int channel;
    std::size_t offset;  // within its map
    int map;             // -1 common, else frame index
};

ElementRef element_ref(const FeatureMaps& w, std::size_t idx) {
    const std::size_t ms = w.map_size();
    const std::size_t plane = static_cast<std::size_t>(w.rows) * w.cols;
    const std::size_t map = idx / ms;
    const std::size_t off = idx % ms;
    return {map == 0 ? MapKind::Common : MapKind::Individual, static_cast<int>(off / plane), off,
            static_cast<int>(map) - 1};
}

double element_value(const FeatureMaps& w, const ElementRef& r) {
    return r.map < 0 ? w.common[r.offset] : w.individual[r.map][r.offset];
}

double gain(const EntropyModel& model, MapKind kind, int channel, const SemanticSettings& s) {
    const double var = std::max(model.variance(kind, channel), 2.0 * s.scale_floor * s.scale_floor);
    return std::pow(var, s.power_exponent);
}

// Distinct (kind, channel) pairs among the first k elements of `order`,
// for every prefix length.
std::vector<std::size_t> prefix_pair_counts(const FeatureMaps& w, const std::vector<std::size_t>& order) {
    std::vector<std::uint8_t> seen(2 * static_cast<std::size_t>(w.channels), 0);
    std::vector<std::size_t> counts(order.size() + 1, 0);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto r = element_ref(w, order[i]);
        auto& flag = seen[static_cast<std::size_t>(r.kind) * w.channels + r.channel];
        if (!flag) {
            flag = 1;
            ++distinct;
        }
        counts[i + 1] = distinct;
    }
    return counts;
}

constexpr double kFloatBits = 32.0;

double side_bits(std::size_t kept, std::size_t total, std::size_t pairs) {
    const double index_bits = std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(total, 2))));
    const double mask_bits = std::min(static_cast<double>(total), static_cast<double>(kept) * index_bits);
    // location, scale and kept-symbol power per used (kind, channel);
    // normalization scale; geometry (channels, rows, cols, gop size).
    return mask_bits + 3.0 * kFloatBits * static_cast<double>(pairs) + kFloatBits + 4.0 * 16.0;
}

}  // namespace

FeatureTensor::FeatureTensor(int f, int c, int r, int k)
    : frames(f), channels(c), rows(r), cols(k),
      data(static_cast<std::size_t>(f) * c * r * k, 0.0) {}

LatentRep latent_transform(const Gop& gop, const SemanticSettings& s) {
    check_settings(s);
    const int b = s.block_size;
    const int rows = (gop.height() + b - 1) / b;
    const int cols = (gop.width() + b - 1) / b;
    LatentRep lat{FeatureTensor(static_cast<int>(gop.size()), s.channel_dim, rows, cols), gop.width(), gop.height(), b};
    const auto& cm = color_matrix();
    const auto basis = dct_basis(b);
    std::vector<double> px(static_cast<std::size_t>(b) * b), tmp(px.size());
    for (int f = 0; f < static_cast<int>(gop.size()); ++f) {
        const Frame& frame = gop[f];
        for (int r = 0; r < rows; ++r)
            for (int k = 0; k < cols; ++k)
                for (int p = 0; p < 3; ++p) {
                    for (int y = 0; y < b; ++y)
                        for (int x = 0; x < b; ++x) {
                            const int sx = std::min(k * b + x, frame.width() - 1);
                            const int sy = std::min(r * b + y, frame.height() - 1);
                            px[y * b + x] = cm[p][0] * frame.at(sx, sy, 0) + cm[p][1] * frame.at(sx, sy, 1) +
                                            cm[p][2] * frame.at(sx, sy, 2);
                        }
                    for (int y = 0; y < b; ++y)
                        for (int u = 0; u < b; ++u) {
                            double acc = 0.0;
                            for (int x = 0; x < b; ++x) acc += basis[u * b + x] * px[y * b + x];
                            tmp[y * b + u] = acc;
                        }
                    for (int v = 0; v < b; ++v)
                        for (int u = 0; u < b; ++u) {
                            double acc = 0.0;
                            for (int y = 0; y < b; ++y) acc += basis[v * b + y] * tmp[y * b + u];
                            lat.tensor.at(f, p * b * b + v * b + u, r, k) = acc;
                        }
                }
    }
    return lat;
}

Gop latent_inverse(const LatentRep& lat) {
    const int b = lat.block_size;
    const auto& t = lat.tensor;
    const auto& cm = color_matrix();
    const auto basis = dct_basis(b);
    std::vector<double> coef(static_cast<std::size_t>(b) * b), tmp(coef.size());
    std::vector<Frame> frames;
    for (int f = 0; f < t.frames; ++f) {
        Frame out(lat.width, lat.height);
        std::vector<double> planes(3 * static_cast<std::size_t>(b) * b);
        for (int r = 0; r < t.rows; ++r)
            for (int k = 0; k < t.cols; ++k) {
                for (int p = 0; p < 3; ++p) {
                    for (int i = 0; i < b * b; ++i) coef[i] = t.at(f, p * b * b + i, r, k);
                    for (int v = 0; v < b; ++v)
                        for (int x = 0; x < b; ++x) {
                            double acc = 0.0;
                            for (int u = 0; u < b; ++u) acc += basis[u * b + x] * coef[v * b + u];
                            tmp[v * b + x] = acc;
                        }
                    for (int y = 0; y < b; ++y)
                        for (int x = 0; x < b; ++x) {
                            double acc = 0.0;
                            for (int v = 0; v < b; ++v) acc += basis[v * b + y] * tmp[v * b + x];
                            planes[p * b * b + y * b + x] = acc;
                        }
                }
                for (int y = 0; y < b; ++y)
                    for (int x = 0; x < b; ++x) {
                        const int px = k * b + x;
                        const int py = r * b + y;
                        if (px >= lat.width || py >= lat.height) continue;
                        for (int c = 0; c < 3; ++c) {
                            double v = 0.0;
                            for (int p = 0; p < 3; ++p) v += cm[p][c] * planes[p * b * b + y * b + x];
                            out.at(px, py, c) = v;
                        }
                    }
            }
        out.clamp();
        frames.push_back(std::move(out));
    }
    return Gop(std::move(frames));
}

double feature_grid() { return std::ldexp(1.0, -40); }

FeatureTensor jscc_encode(const LatentRep& lat) {
    const auto& t = lat.tensor;
    const auto order = frequency_order(lat.block_size, t.channels);
    const double scale = 1.0 / lat.block_size;
    FeatureTensor y(t.frames, t.channels, t.rows, t.cols);
    for (int f = 0; f < t.frames; ++f)
        for (int j = 0; j < t.channels; ++j)
            for (int r = 0; r < t.rows; ++r)
                for (int k = 0; k < t.cols; ++k) y.at(f, j, r, k) = snap(t.at(f, order[j], r, k) * scale);
    return y;
}

LatentRep jscc_decode(const FeatureTensor& y, const LatentRep& geometry) {
    const auto order = frequency_order(geometry.block_size, y.channels);
    const double scale = static_cast<double>(geometry.block_size);
    LatentRep lat{FeatureTensor(y.frames, y.channels, y.rows, y.cols), geometry.width, geometry.height,
                  geometry.block_size};
    for (int f = 0; f < y.frames; ++f)
        for (int j = 0; j < y.channels; ++j)
            for (int r = 0; r < y.rows; ++r)
                for (int k = 0; k < y.cols; ++k) lat.tensor.at(f, order[j], r, k) = y.at(f, j, r, k) * scale;
    return lat;
}

FeatureMaps extract_common(const FeatureTensor& y) {
    if (y.frames < 1) throw std::invalid_argument("extract_common needs at least one frame");
    FeatureMaps w;
    w.channels = y.channels;
    w.rows = y.rows;
    w.cols = y.cols;
    const std::size_t fs = y.frame_size();
    w.common.assign(fs, 0.0);
    for (std::size_t e = 0; e < fs; ++e) {
        double acc = 0.0;
        for (int f = 0; f < y.frames; ++f) acc += y.data[f * fs + e];
        w.common[e] = snap(acc / y.frames);
    }
    w.individual.assign(y.frames, std::vector<double>(fs));
    for (int f = 0; f < y.frames; ++f)
        for (std::size_t e = 0; e < fs; ++e) w.individual[f][e] = y.data[f * fs + e] - w.common[e];
    return w;
}

FeatureTensor combine_common(const FeatureMaps& w) {
    FeatureTensor y(static_cast<int>(w.gop_size()), w.channels, w.rows, w.cols);
    const std::size_t fs = w.map_size();
    for (std::size_t f = 0; f < w.gop_size(); ++f)
        for (std::size_t e = 0; e < fs; ++e) y.data[f * fs + e] = w.common[e] + w.individual[f][e];
    return y;
}

EntropyModel fit_entropy_model(const FeatureMaps& w, const SemanticSettings& s) {
    if (w.map_size() == 0 || w.gop_size() == 0) throw std::invalid_argument("cannot fit an entropy model to empty maps");
    EntropyModel m;
    m.step = s.entropy_step;
    const std::size_t plane = static_cast<std::size_t>(w.rows) * w.cols;
    for (int kind = 0; kind < 2; ++kind) {
        m.location[kind].assign(w.channels, 0.0);
        m.scale[kind].assign(w.channels, s.scale_floor);
    }
    for (int c = 0; c < w.channels; ++c) {
        const std::size_t begin = c * plane;
        // Common map.
        {
            double sum = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < plane; ++i) sum += w.common[begin + i];
            const double mean = sum / plane;
            for (std::size_t i = 0; i < plane; ++i) sq += (w.common[begin + i] - mean) * (w.common[begin + i] - mean);
            m.location[0][c] = mean;
            m.scale[0][c] = std::max(s.scale_floor, std::sqrt(sq / plane / 2.0));
        }
        // Individual maps, pooled over frames.
        {
            double sum = 0.0, sq = 0.0;
            const double count = static_cast<double>(plane * w.gop_size());
            for (const auto& map : w.individual)
                for (std::size_t i = 0; i < plane; ++i) sum += map[begin + i];
            const double mean = sum / count;
            for (const auto& map : w.individual)
                for (std::size_t i = 0; i < plane; ++i) sq += (map[begin + i] - mean) * (map[begin + i] - mean);
            m.location[1][c] = mean;
            m.scale[1][c] = std::max(s.scale_floor, std::sqrt(sq / count / 2.0));
        }
    }
    return m;
}

std::vector<double> likelihood(const FeatureMaps& w, const EntropyModel& model) {
    std::vector<double> em(w.total_elements());
    const double half = 0.5 * model.step;
    for (std::size_t idx = 0; idx < em.size(); ++idx) {
        const auto r = element_ref(w, idx);
        const int kind = static_cast<int>(r.kind);
        const double loc = model.location[kind][r.channel];
        const double sc = model.scale[kind][r.channel];
        const double x = element_value(w, r);
        em[idx] = std::clamp(laplace_cdf(x + half, loc, sc) - laplace_cdf(x - half, loc, sc), kMinLikelihood, 1.0);
    }
    return em;
}

std::vector<std::size_t> selection_order(const FeatureMaps& w, const std::vector<double>& em) {
    if (em.size() != w.total_elements()) throw std::invalid_argument("likelihood count does not match feature maps");
    std::vector<std::size_t> order(em.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t ms = w.map_size();
    // Common elements first; within a group, most informative (lowest em) first.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool ca = a < ms;
        const bool cb = b < ms;
        if (ca != cb) return ca;
        return em[a] < em[b];
    });
    return order;
}

double SemanticPacket::side_info_bits() const {
    std::size_t pairs = 0;
    for (int kind = 0; kind < 2; ++kind)
        for (double p : symbol_power[kind])
            if (p >= 0.0) ++pairs;
    return side_bits(kept(), mask.size(), pairs);
}

SemanticPacket variable_length_code(const FeatureMaps& w, const std::vector<double>& em, const EntropyModel& model,
                                    std::size_t symbol_budget, const SemanticSettings& s) {
    if (symbol_budget < 1) throw std::invalid_argument("symbol budget must be >= 1");
    const auto order = selection_order(w, em);
    const std::size_t keep = std::min(symbol_budget, order.size());

    SemanticPacket pkt;
    pkt.model = model;
    pkt.channels = w.channels;
    pkt.rows = w.rows;
    pkt.cols = w.cols;
    pkt.gop_size = static_cast<int>(w.gop_size());
    pkt.mask.assign(order.size(), 0);
    for (std::size_t i = 0; i < keep; ++i) pkt.mask[order[i]] = 1;

    // Symbols in element order so the receiver can pair them with the mask.
    std::vector<double> raw;
    raw.reserve(keep);
    std::vector<std::size_t> kept_idx;
    kept_idx.reserve(keep);
    for (std::size_t idx = 0; idx < pkt.mask.size(); ++idx) {
        if (!pkt.mask[idx]) continue;
        const auto r = element_ref(w, idx);
        const double loc = model.location[static_cast<int>(r.kind)][r.channel];
        raw.push_back((element_value(w, r) - loc) * gain(model, r.kind, r.channel, s));
        kept_idx.push_back(idx);
    }
    channel::SymbolBlock block{raw};
    if (block.power() > 0.0) {
        auto norm = channel::normalize_power(block);
        pkt.symbols = std::move(norm.block);
        pkt.power_scale = norm.scale;
    } else {
        pkt.symbols = std::move(block);
        pkt.power_scale = 1.0;
    }

    // -1 marks (kind, channel) pairs without kept elements.
    std::vector<double> count[2];
    for (int kind = 0; kind < 2; ++kind) {
        pkt.symbol_power[kind].assign(w.channels, 0.0);
        count[kind].assign(w.channels, 0.0);
    }
    for (std::size_t i = 0; i < kept_idx.size(); ++i) {
        const auto r = element_ref(w, kept_idx[i]);
        const int kind = static_cast<int>(r.kind);
        pkt.symbol_power[kind][r.channel] += pkt.symbols.symbols[i] * pkt.symbols.symbols[i];
        count[kind][r.channel] += 1.0;
    }
    for (int kind = 0; kind < 2; ++kind)
        for (int c = 0; c < w.channels; ++c)
            pkt.symbol_power[kind][c] = count[kind][c] > 0 ? pkt.symbol_power[kind][c] / count[kind][c] : -1.0;
    return pkt;
}

FeatureMaps reconstruct_features(const SemanticPacket& pkt, const channel::SymbolBlock& received,
                                 double noise_variance, const SemanticSettings& s) {
    if (received.symbols.size() != pkt.kept()) throw std::invalid_argument("received symbol count does not match packet");
    FeatureMaps w;
    w.channels = pkt.channels;
    w.rows = pkt.rows;
    w.cols = pkt.cols;
    const std::size_t ms = static_cast<std::size_t>(pkt.channels) * pkt.rows * pkt.cols;
    const std::size_t plane = static_cast<std::size_t>(pkt.rows) * pkt.cols;
    w.common.assign(ms, 0.0);
    w.individual.assign(pkt.gop_size, std::vector<double>(ms, 0.0));
    for (int c = 0; c < pkt.channels; ++c) {
        std::fill_n(w.common.begin() + c * plane, plane, pkt.model.location[0][c]);
        for (auto& map : w.individual) std::fill_n(map.begin() + c * plane, plane, pkt.model.location[1][c]);
    }
    std::size_t next = 0;
    for (std::size_t idx = 0; idx < pkt.mask.size(); ++idx) {
        if (!pkt.mask[idx]) continue;
        const auto r = element_ref(w, idx);
        const int kind = static_cast<int>(r.kind);
        const double p = std::max(0.0, pkt.symbol_power[kind][r.channel]);
        const double shrink = (p + noise_variance) > 0.0 ? p / (p + noise_variance) : 0.0;
        const double g = gain(pkt.model, r.kind, r.channel, s);
        const double value = pkt.model.location[kind][r.channel] + shrink * received.symbols[next++] * pkt.power_scale / g;
        if (r.map < 0)
            w.common[r.offset] = value;
        else
            w.individual[r.map][r.offset] = value;
    }
    return w;
}

SemanticResult semantic_transmit(const Gop& gop, const channel::ChannelConfig& ch, std::size_t symbol_budget,
                                 const SemanticSettings& s, std::uint64_t stream) {
    const LatentRep lat = latent_transform(gop, s);
    const FeatureTensor y = jscc_encode(lat);
    const FeatureMaps w = extract_common(y);
    const EntropyModel model = fit_entropy_model(w, s);
    const auto em = likelihood(w, model);
    const SemanticPacket pkt = variable_length_code(w, em, model, symbol_budget, s);

    const auto rx = channel::awgn(pkt.symbols, ch, stream);
    const FeatureMaps w_hat = reconstruct_features(pkt, rx, ch.noise_variance(), s);
    const LatentRep lat_hat = jscc_decode(combine_common(w_hat), lat);

    SemanticResult out{latent_inverse(lat_hat), {}};
    out.stats.channel_symbols = pkt.kept();
    out.stats.side_info_bits = pkt.side_info_bits();
    out.stats.payload_bits = static_cast<double>(pkt.kept()) * s.bits_per_symbol + out.stats.side_info_bits;
    return out;
}

std::size_t element_count(const Gop& gop, const SemanticSettings& s) {
    check_settings(s);
    const std::size_t rows = (gop.height() + s.block_size - 1) / s.block_size;
    const std::size_t cols = (gop.width() + s.block_size - 1) / s.block_size;
    return rows * cols * s.channel_dim * (gop.size() + 1);
}

std::size_t budget_for_payload(const Gop& gop, double target_bits, const SemanticSettings& s) {
    const FeatureMaps w = extract_common(jscc_encode(latent_transform(gop, s)));
    const auto em = likelihood(w, fit_entropy_model(w, s));
    const auto order = selection_order(w, em);
    const auto pairs = prefix_pair_counts(w, order);
    auto payload = [&](std::size_t k) {
        return static_cast<double>(k) * s.bits_per_symbol + side_bits(k, order.size(), pairs[k]);
    };
    std::size_t lo = 1, hi = order.size();
    if (payload(hi) <= target_bits) return hi;
    if (payload(lo) > target_bits) return lo;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (payload(mid) <= target_bits ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace ceesim::semantic
