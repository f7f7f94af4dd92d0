#include "dualfocus/slide.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/seed.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dualfocus {

void SlideSpec::validate() const {
    if (rows < 1 || cols < 1) throw ConfigError("slide grid must be at least 1x1");
    if (tile_px < 64) throw ConfigError("tile_px must be >= 64 so the autocorrelation lag window fits");
    if (tile_px % 2 != 0) throw ConfigError("tile_px must be even");
    if (!(pixel_pitch_um > 0.0)) throw ConfigError("pixel_pitch must be positive");
    if (!(texture_sigma_px >= 0.0)) throw ConfigError("texture_sigma_px must be non-negative");
    if (!(texture_gain >= 0.0)) throw ConfigError("texture_gain must be non-negative");
    if (!(topo_amplitude_um >= 0.0 && topo_amplitude_um <= 30.0))
        throw ConfigError("topo_amplitude must lie in [0, 30] um to stay inside the detection range");
    if (!(adjacent_limit_um > 0.0)) throw ConfigError("adjacent_limit must be positive");
    if (!(bump_correlation_tiles > 0.0)) throw ConfigError("bump_correlation_tiles must be positive");
}

SlideModel::SlideModel(SlideSpec spec, std::uint64_t seed, std::vector<double> topography_um)
    : spec_(std::move(spec)), seed_(seed), topography_(std::move(topography_um)) {
    spec_.validate();
    if (topography_.size() != static_cast<std::size_t>(spec_.tile_count()))
        throw ConfigError("topography size does not match the tile grid");
    for (double z : topography_)
        if (!std::isfinite(z)) throw ConfigError("topography must be finite");
}

bool SlideModel::contains(TileIndex t) const noexcept {
    return t.row >= 0 && t.row < spec_.rows && t.col >= 0 && t.col < spec_.cols;
}

double SlideModel::z_true(TileIndex t) const {
    if (!contains(t)) throw RangeError("tile (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside grid");
    return topography_[static_cast<std::size_t>(t.row) * spec_.cols + t.col];
}

double SlideModel::max_adjacent_step() const {
    double worst = 0.0;
    for (int r = 0; r < spec_.rows; ++r) {
        for (int c = 0; c < spec_.cols; ++c) {
            const double z = z_true({r, c});
            if (c + 1 < spec_.cols) worst = std::max(worst, std::abs(z_true({r, c + 1}) - z));
            if (r + 1 < spec_.rows) worst = std::max(worst, std::abs(z_true({r + 1, c}) - z));
        }
    }
    return worst;
}

double SlideModel::max_abs_height() const {
    double worst = 0.0;
    for (double z : topography_) worst = std::max(worst, std::abs(z));
    return worst;
}

SlideModel SlideModel::displaced(double dz_um) const {
    auto topo = topography_;
    for (double& z : topo) z += dz_um;
    return SlideModel(spec_, seed_, std::move(topo));
}

TileTexture SlideModel::texture(TileIndex t) const {
    if (!contains(t)) throw RangeError("tile outside grid");
    const int n = spec_.tile_px;
    std::mt19937_64 rng(derive_seed(seed_, {stream::texture, static_cast<std::uint64_t>(t.row),
                                            static_cast<std::uint64_t>(t.col)}));
    std::normal_distribution<double> normal(0.0, 1.0);
    Image noise(n, n);
    for (double& v : noise.pixels()) v = normal(rng);

    // Circular Gaussian low-pass keeps the texture periodic.
    auto spec = fft::forward_2d(noise);
    const double s2 = 2.0 * M_PI * M_PI * spec_.texture_sigma_px * spec_.texture_sigma_px;
    for (int ky = 0; ky < n; ++ky) {
        const double fy = fft::signed_frequency(ky, n);
        for (int kx = 0; kx < spec.half_width(); ++kx) {
            const double fx = kx / static_cast<double>(n);
            spec.at(ky, kx) *= std::exp(-s2 * (fx * fx + fy * fy));
        }
    }
    Image smooth = fft::inverse_2d(spec);

    auto [lo_it, hi_it] = std::minmax_element(smooth.pixels().begin(), smooth.pixels().end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (!(range > 0.0)) throw DegenerateInputError("texture has zero range");
    for (double& v : smooth.pixels()) v = (v - lo) / range;

    // Same affine map applied in the frequency domain: only DC picks up the offset.
    const double inv = 1.0 / range;
    for (auto& b : spec.bins) b *= inv;
    spec.at(0, 0) -= lo * static_cast<double>(n) * n * inv;
    return {std::move(smooth), std::move(spec)};
}

namespace {

std::vector<double> gaussian_smooth_grid(const std::vector<double>& in, int rows, int cols, double sigma) {
    std::vector<double> out(in.size(), 0.0);
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            double wsum = 0.0;
            for (int dr = -radius; dr <= radius; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
                    acc += w * in[static_cast<std::size_t>(rr) * cols + cc];
                    wsum += w;
                }
            }
            out[static_cast<std::size_t>(r) * cols + c] = acc / wsum;
        }
    }
    return out;
}

void normalize_max_abs(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    if (m > 0.0)
        for (double& x : v) x /= m;
}

} // namespace

SlideModel generate_slide(const SlideSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int rows = spec.rows;
    const int cols = spec.cols;
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    std::vector<double> topo(n, 0.0);

    if (spec.topo_amplitude_um > 0.0) {
        std::mt19937_64 rng(derive_seed(seed, {stream::topography}));
        std::normal_distribution<double> normal(0.0, 1.0);
        double coef[6];
        for (double& c : coef) c = normal(rng);

        std::vector<double> poly(n);
        std::vector<double> bumps(n);
        const double hu = std::max(1.0, (cols - 1) / 2.0);
        const double hv = std::max(1.0, (rows - 1) / 2.0);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const double u = (c - (cols - 1) / 2.0) / hu;
                const double v = (r - (rows - 1) / 2.0) / hv;
                poly[static_cast<std::size_t>(r) * cols + c] =
                    coef[0] * 0.25 + coef[1] * u + coef[2] * v + coef[3] * u * u + coef[4] * u * v + coef[5] * v * v;
            }
        }
        for (double& b : bumps) b = normal(rng);
        bumps = gaussian_smooth_grid(bumps, rows, cols, spec.bump_correlation_tiles);
        normalize_max_abs(poly);
        normalize_max_abs(bumps);

        const double a = spec.topo_amplitude_um;
        for (std::size_t i = 0; i < n; ++i) topo[i] = std::clamp(0.6 * a * (poly[i] + bumps[i]), -a, a);

        // Uniform scaling keeps the surface shape and the amplitude bound.
        SlideModel probe(spec, seed, topo);
        const double step = probe.max_adjacent_step();
        if (step > spec.adjacent_limit_um) {
            const double k = spec.adjacent_limit_um / step;
            for (double& z : topo) z *= k;
        }
    }
    return SlideModel(spec, seed, std::move(topo));
}

std::vector<TileIndex> serpentine_order(int rows, int cols) {
    std::vector<TileIndex> order;
    order.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        if (r % 2 == 0)
            for (int c = 0; c < cols; ++c) order.push_back({r, c});
        else
            for (int c = cols - 1; c >= 0; --c) order.push_back({r, c});
    }
    return order;
}

} // namespace dualfocus
