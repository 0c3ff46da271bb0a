#include "ceesim/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ceesim::synthesis {

namespace {

void require_same(const AlphaMatte& a, const AlphaMatte& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": matte dimensions differ");
}

void require_frame(const AlphaMatte& a, const Frame& f, const char* what) {
    if (a.width != f.width() || a.height != f.height())
        throw std::invalid_argument(std::string(what) + ": matte and frame dimensions differ");
}

std::vector<std::uint8_t> binarize(const AlphaMatte& a) {
    std::vector<std::uint8_t> b(a.alpha.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a.alpha[i] >= 0.5 ? 1 : 0;
    return b;
}

// Square-window max (dilate) or min (erode) over in-bounds neighbours,
// computed separably.
std::vector<std::uint8_t> morph(const std::vector<std::uint8_t>& in, int w, int h, int r, bool dilate) {
    auto pick = [dilate](std::uint8_t a, std::uint8_t b) { return dilate ? std::max(a, b) : std::min(a, b); };
    std::vector<std::uint8_t> tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = in[y * w + x];
            for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) v = pick(v, in[y * w + dx]);
            tmp[y * w + x] = v;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = tmp[y * w + x];
            for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) v = pick(v, tmp[dy * w + x]);
            out[y * w + x] = v;
        }
    return out;
}

}  // namespace

AlphaMatte::AlphaMatte(int w, int h, double fill)
    : width(w), height(h), alpha(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("matte dimensions must be non-negative");
}

std::size_t TransitionMask::count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

AlphaMatte estimate_matte(const Frame& fg, const Frame& bg, double threshold, double softness) {
    if (!fg.same_shape(bg)) throw std::invalid_argument("estimate_matte: frame dimensions differ");
    if (!(threshold > 0.0)) throw std::invalid_argument("estimate_matte: threshold must be positive");
    if (!(softness > 0.0)) throw std::invalid_argument("estimate_matte: softness must be positive");
    AlphaMatte m(fg.width(), fg.height());
    const double lo = threshold - softness / 2.0;
    for (int y = 0; y < fg.height(); ++y)
        for (int x = 0; x < fg.width(); ++x) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = fg.at(x, y, c) - bg.at(x, y, c);
                d2 += d * d;
            }
            const double d = std::sqrt(d2 / 3.0);
            m.at(x, y) = std::clamp((d - lo) / softness, 0.0, 1.0);
        }
    return m;
}

TransitionMask transition_mask(const AlphaMatte& alpha_g, int radius) {
    if (radius < 1) throw std::invalid_argument("transition_mask: radius must be >= 1");
    const auto b = binarize(alpha_g);
    const auto dil = morph(b, alpha_g.width, alpha_g.height, radius, true);
    const auto ero = morph(b, alpha_g.width, alpha_g.height, radius, false);
    TransitionMask m{alpha_g.width, alpha_g.height, std::vector<std::uint8_t>(b.size())};
    for (std::size_t i = 0; i < b.size(); ++i) m.mask[i] = dil[i] ^ ero[i];
    return m;
}

AlphaMatte downsample_matte(const AlphaMatte& a, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    const int w = (a.width + factor - 1) / factor;
    const int h = (a.height + factor - 1) / factor;
    AlphaMatte out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    acc += a.at(std::min(x * factor + dx, a.width - 1), std::min(y * factor + dy, a.height - 1));
            out.at(x, y) = acc / (factor * factor);
        }
    return out;
}

double semantic_loss(const AlphaMatte& s_p, const AlphaMatte& alpha_g, int factor) {
    const AlphaMatte g = downsample_matte(alpha_g, factor);
    require_same(s_p, g, "semantic_loss");
    if (g.alpha.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.alpha.size(); ++i) {
        const double d = s_p.alpha[i] - g.alpha[i];
        acc += d * d;
    }
    return 0.5 * acc / static_cast<double>(g.alpha.size());
}

double detail_loss(const AlphaMatte& d_p, const AlphaMatte& alpha_g, const TransitionMask& m_d) {
    require_same(d_p, alpha_g, "detail_loss");
    if (m_d.width != d_p.width || m_d.height != d_p.height)
        throw std::invalid_argument("detail_loss: mask dimensions differ");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m_d.mask.size(); ++i) {
        if (!m_d.mask[i]) continue;
        acc += std::abs(d_p.alpha[i] - alpha_g.alpha[i]);
        ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

FusionTerms fusion_terms(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const Frame& fg, const Frame& bg) {
    require_same(alpha_p, alpha_g, "fusion_loss");
    require_frame(alpha_p, fg, "fusion_loss");
    require_frame(alpha_p, bg, "fusion_loss");
    FusionTerms t;
    const std::size_t n = alpha_p.alpha.size();
    if (n == 0) return t;
    for (std::size_t i = 0; i < n; ++i) t.matte += std::abs(alpha_p.alpha[i] - alpha_g.alpha[i]);
    t.matte /= static_cast<double>(n);
    const Frame ip = composite(fg, bg, alpha_p);
    const Frame ig = composite(fg, bg, alpha_g);
    const auto a = ip.samples();
    const auto b = ig.samples();
    for (std::size_t i = 0; i < a.size(); ++i) t.compositional += std::abs(a[i] - b[i]);
    t.compositional /= static_cast<double>(a.size());
    return t;
}

double fusion_loss(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const Frame& fg, const Frame& bg) {
    return fusion_terms(alpha_p, alpha_g, fg, bg).total();
}

Frame composite(const Frame& x_hat, const Frame& b_hat, const AlphaMatte& alpha) {
    if (!x_hat.same_shape(b_hat)) throw std::invalid_argument("composite: frame dimensions differ");
    require_frame(alpha, x_hat, "composite");
    Frame out(x_hat.width(), x_hat.height());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const double a = std::clamp(alpha.at(x, y), 0.0, 1.0);
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = a * x_hat.at(x, y, c) + (1.0 - a) * b_hat.at(x, y, c);
        }
    out.clamp();
    return out;
}

double matte_iou(const AlphaMatte& a, const AlphaMatte& b) {
    require_same(a, b, "matte_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.alpha.size(); ++i) {
        const bool pa = a.alpha[i] >= 0.5;
        const bool pb = b.alpha[i] >= 0.5;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

SynthesisOutput synthesize(const VideoSequence& user, const Frame& clean_plate, const VideoSequence& background,
                           const SynthesisSettings& s) {
    if (user.empty() || background.empty()) throw std::invalid_argument("synthesize: empty input video");
    if (user.width() != background.width() || user.height() != background.height())
        throw std::invalid_argument("synthesize: user and background dimensions differ");
    SynthesisOutput out{VideoSequence({}, user.fps()), {}};
    std::vector<Frame> frames;
    for (std::size_t i = 0; i < user.size(); ++i) {
        auto m = estimate_matte(user[i], clean_plate, s.threshold, s.softness);
        frames.push_back(composite(user[i], background[i % background.size()], m));
        out.mattes.push_back(std::move(m));
    }
    out.video = VideoSequence(std::move(frames), user.fps());
    return out;
}

}  // namespace ceesim::synthesis
