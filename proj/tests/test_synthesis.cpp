#include <doctest.h>

#include <cmath>
#include <random>

#include "ceesim/fixture.hpp"
#include "ceesim/synthesis.hpp"
#include "helpers.hpp"

using namespace ceesim;
using namespace ceesim::synthesis;
using testing_helpers::random_frame;

namespace {

AlphaMatte square_matte(int w, int h, int x0, int y0, int side) {
    AlphaMatte m(w, h);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(x, y) = 1.0;
    return m;
}

AlphaMatte random_matte(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AlphaMatte m(w, h);
    for (double& a : m.alpha) a = u(rng);
    return m;
}

}  // namespace

TEST_CASE("estimate_matte examples") {
    auto bg = random_frame(20, 16, 1);
    for (double a : estimate_matte(bg, bg, 0.1, 0.05).alpha) CHECK(a == 0.0);

    Frame black(20, 16, 0.0), white(20, 16, 1.0);
    for (double a : estimate_matte(white, black, 0.1, 0.05).alpha) CHECK(a == 1.0);

    CHECK_THROWS(estimate_matte(black, Frame(20, 15), 0.1, 0.05));
    CHECK_THROWS(estimate_matte(black, black, 0.0, 0.05));
}

TEST_CASE("matting a synthetic disk recovers it") {
    const int w = 96, h = 80;
    const double cx = 41.3, cy = 37.8, r = 22.5;
    Frame bg(w, h), fg(w, h);
    AlphaMatte truth(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double cov = std::clamp(r - std::hypot(x + 0.5 - cx, y + 0.5 - cy) + 0.5, 0.0, 1.0);
            truth.at(x, y) = cov;
            for (int c = 0; c < 3; ++c) {
                const double b = quantize8(0.3 + 0.2 * x / w + 0.05 * c);
                bg.at(x, y, c) = b;
                fg.at(x, y, c) = quantize8(cov * (c == 0 ? 0.9 : 0.1) + (1.0 - cov) * b);
            }
        }
    CHECK(matte_iou(estimate_matte(fg, bg, 0.1, 0.05), truth) >= 0.95);
}

TEST_CASE("transition_mask examples") {
    CHECK(transition_mask(AlphaMatte(30, 30, 0.0), 2).count() == 0);
    CHECK(transition_mask(AlphaMatte(30, 30, 1.0), 2).count() == 0);

    const int side = 20;
    auto m = transition_mask(square_matte(40, 40, 10, 10, side), 2);
    CHECK(m.count() == static_cast<std::size_t>((side + 4) * (side + 4) - (side - 4) * (side - 4)));
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            const int dx = std::max({10 - x, x - 29, 0});
            const int dy = std::max({10 - y, y - 29, 0});
            const bool outer = std::max(dx, dy) <= 2 && (dx > 0 || dy > 0);
            const bool inner = dx == 0 && dy == 0 && (x < 12 || x > 27 || y < 12 || y > 27);
            CHECK(m.at(x, y) == ((outer || inner) ? 1 : 0));
        }
}

TEST_CASE("transition mask is empty iff the binarized matte is constant") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pos(0, 15);
    for (int trial = 0; trial < 200; ++trial) {
        AlphaMatte m(16, 16);
        const int n = trial % 4 == 0 ? 0 : trial % 4;
        for (int i = 0; i < n; ++i) m.at(pos(rng), pos(rng)) = 0.9;
        if (trial % 7 == 0) std::fill(m.alpha.begin(), m.alpha.end(), 0.7);
        bool constant = true;
        for (double a : m.alpha) constant &= (a >= 0.5) == (m.alpha[0] >= 0.5);
        CHECK((transition_mask(m, 1 + trial % 3).count() == 0) == constant);
    }
}

TEST_CASE("semantic_loss examples") {
    auto g = random_matte(40, 40, 3);
    auto thumb = downsample_matte(g, 4);
    CHECK(thumb.width == 10);
    CHECK(thumb.height == 10);
    CHECK(semantic_loss(thumb, g, 4) == 0.0);

    AlphaMatte shifted = thumb;
    for (double& a : shifted.alpha) a += 0.1;
    CHECK(semantic_loss(shifted, g, 4) == doctest::Approx(0.5 * 0.01).epsilon(1e-9));

    // Symmetry: swap roles by using a full-resolution ground truth whose thumbnail is `shifted`.
    AlphaMatte g2(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) g2.at(x, y) = shifted.at(x / 4, y / 4);
    CHECK(semantic_loss(thumb, g2, 4) == doctest::Approx(semantic_loss(shifted, g, 4)).epsilon(1e-12));

    CHECK_THROWS(semantic_loss(AlphaMatte(9, 10), g, 4));
    CHECK(downsample_matte(AlphaMatte(41, 39), 4).width == 11);
    CHECK(downsample_matte(AlphaMatte(41, 39), 4).height == 10);
}

TEST_CASE("detail_loss examples") {
    auto g = square_matte(30, 30, 8, 8, 12);
    auto mask = transition_mask(g, 2);
    CHECK(detail_loss(g, g, mask) == 0.0);

    AlphaMatte outside = g;
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            if (!mask.at(x, y)) outside.at(x, y) = 0.5;
    CHECK(detail_loss(outside, g, mask) == 0.0);

    // 50-pixel mask: a 5x10 block.
    TransitionMask m50{30, 30, std::vector<std::uint8_t>(900, 0)};
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 10; ++x) m50.mask[y * 30 + x] = 1;
    CHECK(m50.count() == 50);
    AlphaMatte err = g;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 10; ++x) err.at(x, y) = g.at(x, y) + 0.2;
    CHECK(detail_loss(err, g, m50) == doctest::Approx(0.2).epsilon(1e-12));

    CHECK(detail_loss(err, g, TransitionMask{30, 30, std::vector<std::uint8_t>(900, 0)}) == 0.0);
    CHECK_THROWS(detail_loss(AlphaMatte(29, 30), g, mask));
}

TEST_CASE("fusion_loss examples") {
    auto fg = random_frame(24, 24, 5), bg = random_frame(24, 24, 6);
    auto g = square_matte(24, 24, 4, 4, 10);
    CHECK(fusion_loss(g, g, fg, bg) == 0.0);

    AlphaMatte inv = g;
    for (double& a : inv.alpha) a = 1.0 - a;
    CHECK(fusion_terms(inv, g, fg, bg).matte == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fusion_terms(inv, g, fg, fg).compositional == 0.0);
    CHECK_THROWS(fusion_loss(AlphaMatte(23, 24), g, fg, bg));
}

TEST_CASE("losses vanish at ground truth and are positive elsewhere") {
    auto fg = random_frame(32, 32, 7), bg = random_frame(32, 32, 8);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto g = random_matte(32, 32, seed);
        auto p = g;
        std::mt19937_64 rng(seed + 100);
        std::uniform_int_distribution<int> pos(0, 31);
        const int x = pos(rng), y = pos(rng);
        p.at(x, y) = g.at(x, y) > 0.5 ? g.at(x, y) - 0.3 : g.at(x, y) + 0.3;

        CHECK(fusion_loss(g, g, fg, bg) == 0.0);
        CHECK(fusion_loss(p, g, fg, bg) > 0.0);

        CHECK(semantic_loss(downsample_matte(g, 4), g, 4) == 0.0);
        auto s = downsample_matte(p, 4);
        CHECK(semantic_loss(s, g, 4) > 0.0);

        TransitionMask full{32, 32, std::vector<std::uint8_t>(32 * 32, 1)};
        CHECK(detail_loss(g, g, full) == 0.0);
        CHECK(detail_loss(p, g, full) > 0.0);
    }
}

TEST_CASE("composite examples and properties") {
    auto x = random_frame(16, 12, 9), b = random_frame(16, 12, 10);
    auto ones = AlphaMatte(16, 12, 1.0), zeros = AlphaMatte(16, 12, 0.0);
    CHECK(composite(x, b, ones).samples()[5] == x.samples()[5]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(composite(x, b, ones).samples()[i] == x.samples()[i]);
        CHECK(composite(x, b, zeros).samples()[i] == b.samples()[i]);
    }
    CHECK(composite(Frame(4, 4, 1.0), Frame(4, 4, 0.0), AlphaMatte(4, 4, 0.5)).at(2, 2, 1) == 0.5);
    CHECK_THROWS(composite(x, Frame(16, 11), ones));

    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto a = random_matte(16, 12, seed);
        auto out = composite(x, b, a);
        auto same = composite(x, x, a);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double lo = std::min(x.samples()[i], b.samples()[i]);
            const double hi = std::max(x.samples()[i], b.samples()[i]);
            CHECK(out.samples()[i] >= lo - 1e-15);
            CHECK(out.samples()[i] <= hi + 1e-15);
            CHECK(std::abs(same.samples()[i] - x.samples()[i]) < 1e-15);
        }
    }
}

TEST_CASE("matte_iou examples") {
    auto a = square_matte(20, 20, 0, 0, 10);
    CHECK(matte_iou(a, a) == 1.0);
    CHECK(matte_iou(AlphaMatte(20, 20), AlphaMatte(20, 20)) == 1.0);
    CHECK(matte_iou(a, square_matte(20, 20, 10, 10, 10)) == 0.0);
    CHECK(matte_iou(a, square_matte(20, 20, 5, 0, 10)) == doctest::Approx(50.0 / 150.0));
}

TEST_CASE("synthesize on the fixture") {
    const auto fx = fixture::make_fixture();
    const auto out = synthesize(fx.user, fx.clean_plate, fx.background);
    REQUIRE(out.video.size() == fx.user.size());
    REQUIRE(out.mattes.size() == fx.user.size());
    double iou = 0.0;
    for (std::size_t i = 0; i < out.mattes.size(); ++i) iou += matte_iou(out.mattes[i], fx.mattes[i]);
    CHECK(iou / out.mattes.size() >= 0.9);

    VideoSequence short_bg({fx.background[0]}, 25.0);
    auto looped = synthesize(fx.user, fx.clean_plate, short_bg);
    CHECK(looped.video.size() == fx.user.size());
}
