#include "dualfocus/brenner.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/shift_estimator.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace dualfocus;

namespace {

SlideSpec spec_px(int px, ContrastMode mode = ContrastMode::stained) {
    SlideSpec s;
    s.rows = 2;
    s.cols = 2;
    s.tile_px = px;
    s.contrast_mode = mode;
    return s;
}

DefocusGeometry pure_two_copy() {
    DefocusGeometry g;
    g.coherence_alpha = 0.0;
    g.defocus_beta = 0.0;
    return g;
}

CaptureRequest request(double z, double blur = 0.0, ScanAxis axis = ScanAxis::y, double noise = 0.0) {
    CaptureRequest r;
    r.tile = {1, 0};
    r.z_stage_um = z;
    r.blur_px = blur;
    r.scan_axis = axis;
    r.noise_sigma = noise;
    r.seed = 17;
    return r;
}

// Defocus giving an exact separation under the default slope.
double defocus_for(const DefocusGeometry& g, double separation) { return separation / g.separation_slope(); }

} // namespace

TEST_CASE("pure two-copy frame is the half-sum of copies shifted by +-S/2") {
    const auto model = oracle::flat_slide(spec_px(256), 21);
    const auto geom = pure_two_copy();
    const OpticsParams optics;
    const auto frame = render_dual_led(model, geom, optics, request(defocus_for(geom, 40.0)));
    const Image tex = model.texture({1, 0}).spatial;
    const Image left = oracle::shift_x(tex, 20);
    const Image right = oracle::shift_x(tex, -20);
    double worst = 0.0;
    for (std::size_t i = 0; i < tex.size(); ++i) {
        const double expected = optics.background + 0.5 * (left.pixels()[i] + right.pixels()[i]);
        worst = std::max(worst, std::abs(frame.pixels.pixels()[i] - expected));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("in-focus stained frame equals the texture and shows no first-order peak") {
    const auto model = oracle::flat_slide(spec_px(512), 3);
    const OpticsParams optics;
    const auto frame = render_dual_led(model, DefocusGeometry{}, optics, request(0.0));
    const Image tex = model.texture({1, 0}).spatial;
    for (std::size_t i = 0; i < tex.size(); i += 101)
        CHECK(frame.pixels.pixels()[i] == doctest::Approx(optics.background + tex.pixels()[i]).epsilon(1e-10));
    const auto est = estimate_shift(frame, {16.0, 240.0});
    CHECK_FALSE(est.accepted);
}

TEST_CASE("transparent specimen at focus shows only noise") {
    const auto model = oracle::flat_slide(spec_px(256, ContrastMode::transparent), 3);
    const auto frame = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(0.0, 0.0, ScanAxis::y, 0.01));
    CHECK(stddev(frame.pixels) <= 0.0105);
    const auto noiseless = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(0.0));
    CHECK(stddev(noiseless.pixels) < 1e-12);
}

TEST_CASE("transparent contrast grows with defocus") {
    const OpticsParams o;
    CHECK(coherent_contrast(ContrastMode::transparent, 0.0, o) == 0.0);
    CHECK(coherent_contrast(ContrastMode::transparent, 20.0, o) == doctest::Approx(0.5));
    CHECK(coherent_contrast(ContrastMode::transparent, 60.0, o) > coherent_contrast(ContrastMode::transparent, 30.0, o));
    CHECK(coherent_contrast(ContrastMode::stained, 0.0, o) == 1.0);
}

TEST_CASE("y motion blur commutes with the two-copy render") {
    const auto model = oracle::flat_slide(spec_px(256), 8);
    const DefocusGeometry geom;
    const OpticsParams optics;
    const auto still = render_dual_led(model, geom, optics, request(60.0));
    for (double blur : {7.0, 50.0, 110.0, 33.3}) {
        const auto moving = render_dual_led(model, geom, optics, request(60.0, blur));
        const Image expected = box_blur(still.pixels, blur, ScanAxis::y);
        double worst = 0.0;
        for (std::size_t i = 0; i < expected.size(); ++i)
            worst = std::max(worst, std::abs(moving.pixels.pixels()[i] - expected.pixels()[i]));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("x motion blur matches a direct box blur along x") {
    const auto model = oracle::flat_slide(spec_px(128), 8);
    const auto still = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(40.0));
    const auto moving = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(40.0, 30.0, ScanAxis::x));
    const Image expected = box_blur(still.pixels, 30.0, ScanAxis::x);
    for (std::size_t i = 0; i < expected.size(); i += 7)
        CHECK(moving.pixels.pixels()[i] == doctest::Approx(expected.pixels()[i]).epsilon(1e-10));
}

TEST_CASE("mean intensity does not depend on blur") {
    const auto model = oracle::flat_slide(spec_px(256), 12);
    const auto ref = mean(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(55.0)).pixels);
    for (double blur : {1.0, 50.0, 90.0, 110.0})
        for (auto axis : {ScanAxis::x, ScanAxis::y}) {
            auto r = request(55.0, blur, axis);
            CHECK(std::abs(mean(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r).pixels) - ref) < 1e-10);
        }
}

TEST_CASE("box kernel taps are normalized, symmetric and fractional at the ends") {
    CHECK(box_kernel_taps(0.0) == std::vector<double>{1.0});
    for (double len : {1.0, 2.0, 3.5, 50.0, 110.0}) {
        const auto taps = box_kernel_taps(len);
        CHECK(std::accumulate(taps.begin(), taps.end(), 0.0) == doctest::Approx(1.0));
        for (std::size_t i = 0; i < taps.size(); ++i) CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
        // Centroid-free support of total length len.
        double support = 0.0;
        for (double t : taps) support += t / taps[taps.size() / 2];
        CHECK(support == doctest::Approx(len));
    }
    const auto two = box_kernel_taps(2.0);
    REQUIRE(two.size() == 3);
    CHECK(two[0] == doctest::Approx(0.25));
    CHECK(two[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(box_kernel_taps(-1.0), ArgumentError);
}

TEST_CASE("estimate quality does not improve as the source blur grows") {
    const auto model = oracle::flat_slide(spec_px(512), 31);
    const OpticsParams optics;
    double previous = 1e300;
    for (double alpha : {0.0, 0.05, 0.1, 0.2, 0.4}) {
        DefocusGeometry geom;
        geom.coherence_alpha = alpha;
        double q = 0.0;
        for (int c = 0; c < 2; ++c) {
            auto r = request(60.0);
            r.tile = {0, c};
            q += estimate_shift(render_dual_led(model, geom, optics, r), {16.0, 240.0}).quality;
        }
        CHECK(q <= previous);
        previous = q;
    }
}

TEST_CASE("rendered pixels are finite and non-negative, metadata is carried") {
    const auto model = oracle::flat_slide(spec_px(128), 2);
    auto r = request(60.0, 20.0, ScanAxis::y, 0.3);
    const auto f = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r);
    for (double v : f.pixels.pixels()) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    CHECK(f.tile == r.tile);
    CHECK(f.z_stage_um == 60.0);
    CHECK(f.blur_px == 20.0);
    CHECK(f.illumination == Illumination::dual_led);
}

TEST_CASE("capture requests are validated") {
    const auto model = oracle::flat_slide(spec_px(128), 2);
    auto r = request(60.0);
    r.tile = {2, 0};
    CHECK_THROWS_AS(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r), RangeError);
    r = request(60.0);
    r.noise_sigma = -0.1;
    CHECK_THROWS_AS(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r), ArgumentError);
    r = request(60.0);
    r.illumination = Illumination::kohler;
    CHECK_THROWS_AS(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r), ArgumentError);
}

TEST_CASE("noise is reproducible from the seed") {
    const auto model = oracle::flat_slide(spec_px(128), 2);
    const auto a = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(60.0, 0.0, ScanAxis::y, 0.05));
    const auto b = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(60.0, 0.0, ScanAxis::y, 0.05));
    CHECK(a.pixels == b.pixels);
    auto r = request(60.0, 0.0, ScanAxis::y, 0.05);
    r.seed = 18;
    CHECK(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r).pixels != a.pixels);
}

TEST_CASE("shot noise keeps the mean and stays non-negative") {
    const auto model = oracle::flat_slide(spec_px(256), 2);
    OpticsParams optics;
    optics.noise_model = NoiseModel::poisson;
    const auto clean = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, request(60.0));
    const auto noisy = render_dual_led(model, DefocusGeometry{}, optics, request(60.0));
    CHECK(mean(noisy.pixels) == doctest::Approx(mean(clean.pixels)).epsilon(0.01));
    CHECK(noisy.pixels != clean.pixels);
    for (double v : noisy.pixels.pixels()) CHECK(v >= 0.0);
}

TEST_CASE("Koehler stack spans n steps around the centre") {
    const auto model = oracle::flat_slide(spec_px(128), 2);
    const auto stack = render_kohler_stack(model, OpticsParams{}, {0, 1}, 1.0, 11, 0.5, 0.0, 5);
    REQUIRE(stack.size() == 11);
    CHECK(stack.back().z_stage_um - stack.front().z_stage_um == doctest::Approx(5.0));
    CHECK(stack[5].z_stage_um == doctest::Approx(1.0));
    for (const auto& f : stack) CHECK(f.illumination == Illumination::kohler);
    CHECK_THROWS_AS(render_kohler_stack(model, OpticsParams{}, {0, 1}, 0.0, 10), ArgumentError);
    CHECK_THROWS_AS(render_kohler_stack(model, OpticsParams{}, {0, 1}, 0.0, 11, 0.0), ArgumentError);
    CHECK_THROWS_AS(render_kohler_stack(model, OpticsParams{}, {3, 1}, 0.0), RangeError);
}

TEST_CASE("Koehler sharpness peaks at the true focus and decays with defocus") {
    const auto model = generate_slide(spec_px(256), 6);
    const TileIndex tile{1, 1};
    const double z0 = model.z_true(tile);
    const auto stack = render_kohler_stack(model, OpticsParams{}, tile, z0, 11, 0.5, 0.0, 5);
    std::vector<double> scores;
    for (const auto& f : stack) scores.push_back(oracle::brenner(f.pixels));
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (i != 5) CHECK(scores[i] < scores[5]);
    const auto tex = model.texture(tile);
    const auto at1 = render_kohler(model, tex, OpticsParams{}, tile, z0 + 1.0, 0.0, 1);
    const auto at3 = render_kohler(model, tex, OpticsParams{}, tile, z0 - 3.0, 0.0, 1);
    CHECK(oracle::brenner(at3.pixels) < oracle::brenner(at1.pixels));
}
