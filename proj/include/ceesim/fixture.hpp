#pragma once

#include <cstdint>
#include <vector>

#include "ceesim/synthesis.hpp"
#include "ceesim/video.hpp"

namespace ceesim::fixture {

struct FixtureSpec {
    int width = 192;
    int height = 192;
    int frames = 8;
    double fps = 25.0;
    std::uint64_t seed = 1;
};

/// Procedural test material: a figure moving in front of a static studio
/// backdrop, the empty backdrop, a slowly panning landscape to composite
/// onto, and the exact coverage of the figure.
struct FixtureSet {
    VideoSequence user;
    Frame clean_plate;
    VideoSequence background;
    std::vector<synthesis::AlphaMatte> mattes;
};

FixtureSet make_fixture(const FixtureSpec& spec = {});

/// The user video of make_fixture (the clip the transmission chains run on).
VideoSequence fixture_clip(const FixtureSpec& spec = {});

}  // namespace ceesim::fixture
