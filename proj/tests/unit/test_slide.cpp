#include "dualfocus/errors.hpp"
#include "dualfocus/serialization.hpp"
#include "dualfocus/slide.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace dualfocus;

namespace {

SlideSpec small_spec() {
    SlideSpec s;
    s.rows = 4;
    s.cols = 5;
    s.tile_px = 128;
    return s;
}

double max_adjacent(const SlideModel& m) {
    double worst = 0.0;
    for (int r = 0; r < m.spec().rows; ++r)
        for (int c = 0; c < m.spec().cols; ++c) {
            if (c + 1 < m.spec().cols) worst = std::max(worst, std::abs(m.z_true({r, c}) - m.z_true({r, c + 1})));
            if (r + 1 < m.spec().rows) worst = std::max(worst, std::abs(m.z_true({r, c}) - m.z_true({r + 1, c})));
        }
    return worst;
}

} // namespace

TEST_CASE("zero amplitude gives a flat slide") {
    SlideSpec s = small_spec();
    s.topo_amplitude_um = 0.0;
    const auto m = generate_slide(s, 5);
    for (double z : m.topography()) CHECK(z == 0.0);
}

TEST_CASE("same spec and seed give identical slides") {
    const auto a = generate_slide(small_spec(), 77);
    const auto b = generate_slide(small_spec(), 77);
    CHECK(a.topography() == b.topography());
    CHECK(a.texture({1, 2}).spatial == b.texture({1, 2}).spatial);
    const auto c = generate_slide(small_spec(), 78);
    CHECK(a.topography() != c.topography());
}

TEST_CASE("adjacent tiles respect the step limit and default slides exceed 1 um somewhere") {
    SlideSpec s;
    int exceeding = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = generate_slide(s, seed);
        CHECK(max_adjacent(m) <= s.adjacent_limit_um + 1e-12);
        CHECK(m.max_adjacent_step() == doctest::Approx(max_adjacent(m)));
        if (max_adjacent(m) > 1.0) ++exceeding;
    }
    CHECK(exceeding == 10);
}

TEST_CASE("topography stays inside the amplitude bound") {
    for (double amp : {1.0, 8.0, 30.0}) {
        SlideSpec s;
        s.topo_amplitude_um = amp;
        const auto m = generate_slide(s, 3);
        CHECK(m.max_abs_height() <= amp + 1e-12);
    }
}

TEST_CASE("textures are normalized to [0, 1] and differ between tiles") {
    const auto m = generate_slide(small_spec(), 9);
    const auto t = m.texture({0, 0});
    const auto [lo, hi] = std::minmax_element(t.spatial.pixels().begin(), t.spatial.pixels().end());
    CHECK(*lo == doctest::Approx(0.0).scale(1.0));
    CHECK(*hi == doctest::Approx(1.0));
    CHECK(t.spatial.width() == 128);
    CHECK(t.spatial.height() == 128);
    CHECK(m.texture({0, 1}).spatial != t.spatial);
}

TEST_CASE("texture spectrum matches its spatial form") {
    const auto m = generate_slide(small_spec(), 9);
    const auto t = m.texture({2, 3});
    const auto back = fft::inverse_2d(t.spectrum);
    for (std::size_t i = 0; i < back.size(); i += 97)
        CHECK(back.pixels()[i] == doctest::Approx(t.spatial.pixels()[i]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("invalid specs are configuration errors") {
    SlideSpec s = small_spec();
    s.tile_px = 32;
    CHECK_THROWS_AS(generate_slide(s, 1), ConfigError);
    s = small_spec();
    s.tile_px = 129;
    CHECK_THROWS_AS(generate_slide(s, 1), ConfigError);
    s = small_spec();
    s.rows = 0;
    CHECK_THROWS_AS(generate_slide(s, 1), ConfigError);
    s = small_spec();
    s.topo_amplitude_um = 31.0;
    CHECK_THROWS_AS(generate_slide(s, 1), ConfigError);
}

TEST_CASE("z_true outside the grid is a range error") {
    const auto m = generate_slide(small_spec(), 1);
    CHECK_THROWS_AS(m.z_true({4, 0}), RangeError);
    CHECK_THROWS_AS(m.z_true({0, -1}), RangeError);
    CHECK_FALSE(m.contains({0, 5}));
}

TEST_CASE("displaced shifts every tile by the same amount") {
    const auto m = generate_slide(small_spec(), 4);
    const auto d = m.displaced(-12.5);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) CHECK(d.z_true({r, c}) == doctest::Approx(m.z_true({r, c}) - 12.5));
    CHECK(d.texture({1, 1}).spatial == m.texture({1, 1}).spatial);
}

TEST_CASE("serpentine order covers each tile once, reversing every other row") {
    const auto order = serpentine_order(3, 4);
    REQUIRE(order.size() == 12);
    std::set<std::pair<int, int>> seen;
    for (auto t : order) seen.insert({t.row, t.col});
    CHECK(seen.size() == 12);
    CHECK(order[0].col == 0);
    CHECK(order[3].col == 3);
    CHECK(order[4].row == 1);
    CHECK(order[4].col == 3);
    CHECK(order[7].col == 0);
    for (std::size_t i = 1; i < order.size(); ++i)
        CHECK(std::abs(order[i].row - order[i - 1].row) + std::abs(order[i].col - order[i - 1].col) == 1);
}

TEST_CASE("slide spec JSON round trip") {
    SlideSpec s = small_spec();
    s.label = "kidney";
    s.contrast_mode = ContrastMode::transparent;
    s.texture_gain = 0.6;
    const auto back = json::parse(json(s).dump()).get<SlideSpec>();
    CHECK(back == s);
}
