#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/shift_estimator.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dualfocus;

namespace {

Image white_noise(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.5, 0.1);
    Image img(w, h);
    for (double& v : img.pixels()) v = n(rng);
    return img;
}

const LagWindow kWide{16.0, 240.0};

} // namespace

TEST_CASE("FFT profile equals direct lag products on 128x32 frames") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Image img = white_noise(128, 32, seed);
        const auto fast = autocorrelate_1d(img);
        const auto slow = oracle::direct_autocorrelation(img);
        REQUIRE(fast.values.size() == slow.size());
        for (std::size_t i = 0; i < slow.size(); ++i) CHECK(std::abs(fast.values[i] - slow[i]) <= 1e-8 * std::abs(slow[i]) + 1e-12);
    }
}

TEST_CASE("profile is symmetric with its maximum at zero lag") {
    const Image img = white_noise(256, 16, 9);
    const auto p = autocorrelate_1d(img);
    CHECK(p.at(0) == doctest::Approx(1.0));
    for (int lag = 1; lag < p.length / 2; ++lag) {
        CHECK(std::abs(p.at(lag) - p.at(-lag)) < 1e-9);
        CHECK(p.at(lag) <= p.at(0));
    }
}

TEST_CASE("cosine frame gives a cosine profile") {
    const int n = 256;
    const int period = 32;
    Image img(n, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < n; ++x) img(x, y) = 3.0 + std::cos(2.0 * M_PI * x / period + y);
    const auto p = autocorrelate_1d(img);
    for (int lag = p.min_lag(); lag <= p.max_lag(); ++lag)
        CHECK(p.at(lag) == doctest::Approx(std::cos(2.0 * M_PI * lag / period)).scale(1.0).epsilon(1e-10));
}

TEST_CASE("two copies at +-20 px give local maxima at +-40 lags, matching the direct oracle") {
    const auto tex = oracle::random_cosine_texture(256, 120, 60, 4);
    const Image img = oracle::two_copy_frame(tex, 40.0, 24);
    const auto p = autocorrelate_1d(img);
    const auto slow = oracle::direct_autocorrelation(img);
    for (int lag : {-40, 40}) {
        CHECK(p.at(lag) > p.at(lag - 1));
        CHECK(p.at(lag) > p.at(lag + 1));
        const auto i = static_cast<std::size_t>(lag + 128);
        CHECK(p.values[i] == doctest::Approx(slow[i]).epsilon(1e-8));
    }
}

// Texture sidelobes bias the sub-pixel peak away from the true separation, so the
// tight bound is against the exhaustive-lag refinement of the same profile.
TEST_CASE("exact two-copy frames: estimate matches the exhaustive-lag peak within 0.05 px") {
    for (double s : {20.0, 40.0, 40.5, 77.3, 120.25}) {
        const auto tex = oracle::random_cosine_texture(512, 200, 80, 100 + static_cast<std::uint64_t>(s * 4));
        const Image img = oracle::two_copy_frame(tex, s, 16);
        const auto est = estimate_shift(img, kWide);
        CHECK(est.accepted);
        CHECK(std::abs(est.separation_px - s) <= 1.0);
        const auto p = autocorrelate_1d(img);
        CHECK(std::abs(est.separation_px - oracle::exhaustive_peak(p, 16, 240)) <= 0.05);
    }
}

TEST_CASE("constant frames are degenerate") {
    CHECK_THROWS_AS(autocorrelate_1d(Image(128, 4, 0.7)), DegenerateInputError);
    Image rows(128, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 128; ++x) rows(x, y) = y;
    CHECK_THROWS_AS(autocorrelate_1d(rows), DegenerateInputError);
}

TEST_CASE("frame shape preconditions") {
    CHECK_THROWS_AS(autocorrelate_1d(white_noise(128, 1, 1)), ArgumentError);
    CHECK_THROWS_AS(autocorrelate_1d(white_noise(64, 8, 1)), ArgumentError);
    CHECK_THROWS_AS(autocorrelate_1d(white_noise(129, 8, 1)), ArgumentError);
}

TEST_CASE("lag window preconditions") {
    const auto p = autocorrelate_1d(white_noise(256, 8, 1));
    CHECK_THROWS_AS(find_separation(p, {50.0, 40.0}), ArgumentError);
    CHECK_THROWS_AS(find_separation(p, {0.0, 40.0}), ArgumentError);
    CHECK_THROWS_AS(find_separation(p, {20.0, 128.0}), ArgumentError);
    CHECK_THROWS_AS(find_separation(p, {20.3, 20.7}), ArgumentError);
    CHECK_NOTHROW(find_separation(p, {20.0, 126.0}));
}

TEST_CASE("white noise is rejected in at least 99 of 100 seeds") {
    int accepted = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        if (estimate_shift(white_noise(512, 64, 1000 + seed), kWide).accepted) ++accepted;
    CHECK(accepted <= 1);
}

TEST_CASE("a peak on the window edge is rejected, not thrown") {
    const auto tex = oracle::random_cosine_texture(512, 200, 80, 8);
    const Image img = oracle::two_copy_frame(tex, 100.0, 16);
    const auto est = estimate_shift(img, {60.0, 100.0});
    CHECK(est.edge_peak);
    CHECK_FALSE(est.accepted);
    const auto inside = estimate_shift(img, {60.0, 140.0});
    CHECK_FALSE(inside.edge_peak);
    CHECK(inside.accepted);
}

TEST_CASE("accepted estimates satisfy the gate and lie in the window") {
    const auto tex = oracle::random_cosine_texture(512, 200, 80, 8);
    for (double s : {30.0, 90.0, 150.0}) {
        const auto est = estimate_shift(oracle::two_copy_frame(tex, s, 8), kWide);
        if (est.accepted) {
            CHECK(est.quality >= 3.0);
            CHECK(est.separation_px >= kWide.min_px);
            CHECK(est.separation_px <= kWide.max_px);
        }
        CHECK(est.lag_window == kWide);
    }
}

TEST_CASE("circular translation leaves the separation unchanged") {
    const auto tex = oracle::random_cosine_texture(512, 200, 80, 12);
    const Image img = oracle::two_copy_frame(tex, 63.7, 16);
    const double base = estimate_shift(img, kWide).separation_px;
    for (int dx : {1, 17, 200}) CHECK(std::abs(estimate_shift(oracle::shift_x(img, dx), kWide).separation_px - base) <= 0.05);
    Image rolled(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rolled(x, y) = img(x, (y + 5) % img.height());
    CHECK(std::abs(estimate_shift(rolled, kWide).separation_px - base) <= 0.05);
}

TEST_CASE("intensity scaling leaves the estimate unchanged") {
    const auto model = oracle::flat_slide(SlideSpec{}, 5);
    CaptureRequest r;
    r.z_stage_um = 60.0;
    const auto frame = render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r);
    const auto base = estimate_shift(frame, kWide);
    for (double c : {0.01, 3.0, 1000.0}) {
        Image scaled = frame.pixels;
        for (double& v : scaled.pixels()) v *= c;
        const auto est = estimate_shift(scaled, kWide);
        CHECK(est.separation_px == doctest::Approx(base.separation_px).epsilon(1e-9));
        CHECK(est.accepted == base.accepted);
    }
}

TEST_CASE("static default frame at 60 um lands within 0.5 px of the forward model") {
    const auto model = oracle::flat_slide(SlideSpec{}, 5);
    const DefocusGeometry geom;
    for (int c = 0; c < 3; ++c) {
        CaptureRequest r;
        r.tile = {0, c};
        r.z_stage_um = 60.0;
        r.seed = 40 + c;
        const auto est = estimate_shift(render_dual_led(model, geom, OpticsParams{}, r), kWide);
        CHECK(est.accepted);
        CHECK(std::abs(est.separation_px - separation_from_defocus(geom, 60.0)) <= 0.5);
    }
}

TEST_CASE("y blur moves the separation by at most 0.2 px") {
    const auto model = oracle::flat_slide(SlideSpec{}, 5);
    const DefocusGeometry geom;
    CaptureRequest r;
    r.tile = {2, 2};
    r.z_stage_um = 60.0;
    r.noise_sigma = 0.0;
    const double still = estimate_shift(render_dual_led(model, geom, OpticsParams{}, r), kWide).separation_px;
    double lo = still;
    double hi = still;
    for (double blur : {50.0, 90.0, 110.0}) {
        r.blur_px = blur;
        const double s = estimate_shift(render_dual_led(model, geom, OpticsParams{}, r), kWide).separation_px;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    CHECK(hi - lo <= 0.2);
}

TEST_CASE("parabolic vertex") {
    CHECK(parabolic_vertex(1.0, 2.0, 1.0) == 0.0);
    // Samples of -(x - 0.3)^2.
    auto f = [](double x) { return -(x - 0.3) * (x - 0.3); };
    CHECK(parabolic_vertex(f(-1), f(0), f(1)) == doctest::Approx(0.3));
    CHECK(parabolic_vertex(1.0, 1.0, 1.0) == 0.0);
    CHECK(parabolic_vertex(0.0, 1.0, 2.0) == 0.0);
    CHECK(std::abs(parabolic_vertex(0.0, 1.0, 0.999)) < 0.5);
}
