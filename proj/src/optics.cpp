#include "dualfocus/optics.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/seed.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace dualfocus {

std::string_view to_string(NoiseModel m) { return m == NoiseModel::gaussian ? "gaussian" : "poisson"; }

NoiseModel noise_model_from_string(std::string_view s) {
    if (s == "gaussian") return NoiseModel::gaussian;
    if (s == "poisson") return NoiseModel::poisson;
    throw ConfigError("unknown noise model '" + std::string(s) + "'");
}

void OpticsParams::validate() const {
    if (!(transparent_dc_um > 0.0)) throw ConfigError("transparent_dc must be positive");
    if (!(kohler_gamma >= 0.0)) throw ConfigError("kohler_gamma must be non-negative");
    if (!(kohler_transparent_contrast >= 0.0)) throw ConfigError("kohler_transparent_contrast must be non-negative");
    if (!(background >= 0.0)) throw ConfigError("background must be non-negative");
    if (!(shot_photons > 0.0)) throw ConfigError("shot_photons must be positive");
}

double coherent_contrast(ContrastMode mode, double defocus_um, const OpticsParams& optics) {
    if (mode == ContrastMode::stained) return 1.0;
    return defocus_um / (defocus_um + optics.transparent_dc_um);
}

std::vector<double> box_kernel_taps(double length_px) {
    if (!(length_px >= 0.0)) throw ArgumentError("blur length must be non-negative");
    if (length_px == 0.0) return {1.0};
    const double half = length_px / 2.0;
    const int m = static_cast<int>(std::ceil(half - 0.5));
    std::vector<double> taps(static_cast<std::size_t>(2 * m + 1));
    double total = 0.0;
    for (int k = -m; k <= m; ++k) {
        const double overlap = std::min(k + 0.5, half) - std::max(k - 0.5, -half);
        taps[static_cast<std::size_t>(k + m)] = std::max(0.0, overlap);
        total += taps[static_cast<std::size_t>(k + m)];
    }
    for (double& t : taps) t /= total;
    return taps;
}

Image box_blur(const Image& img, double length_px, ScanAxis axis) {
    const auto taps = box_kernel_taps(length_px);
    const int m = static_cast<int>(taps.size() / 2);
    const int w = img.width();
    const int h = img.height();
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -m; k <= m; ++k) {
                const double t = taps[static_cast<std::size_t>(k + m)];
                if (axis == ScanAxis::x)
                    acc += t * img(((x - k) % w + w) % w, y);
                else
                    acc += t * img(x, ((y - k) % h + h) % h);
            }
            out(x, y) = acc;
        }
    }
    return out;
}

namespace {

// Real transfer function of the centred symmetric box kernel.
std::vector<double> box_transfer(double length_px, int n) {
    const auto taps = box_kernel_taps(length_px);
    const int m = static_cast<int>(taps.size() / 2);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double f = fft::signed_frequency(k, n);
        double acc = taps[static_cast<std::size_t>(m)];
        for (int j = 1; j <= m; ++j) acc += 2.0 * taps[static_cast<std::size_t>(m + j)] * std::cos(2.0 * M_PI * f * j);
        out[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

// Kernel widths are full widths at half maximum.
constexpr double kFwhmToSigma = 0.42466090014400953; // 1 / (2 sqrt(2 ln 2))

double gaussian_transfer(double sigma, double f) { return std::exp(-2.0 * M_PI * M_PI * sigma * sigma * f * f); }

// background + gain * texture, filtered by separable transfer hx(kx) * hy(ky).
Image filtered_intensity(const TileTexture& texture, double gain, double background, const std::vector<double>& hx,
                         const std::vector<double>& hy) {
    fft::Spectrum2d spec{texture.spectrum.height, texture.spectrum.width,
                         fft::AlignedBuffer<fft::Complex>(texture.spectrum.bins.size())};
    const int n_y = spec.height;
    const int n_x = spec.width;
    for (int ky = 0; ky < n_y; ++ky)
        for (int kx = 0; kx < spec.half_width(); ++kx)
            spec.at(ky, kx) = texture.spectrum.at(ky, kx) * (gain * hx[static_cast<std::size_t>(kx)] *
                                                             hy[static_cast<std::size_t>(ky)]);
    spec.at(0, 0) += background * static_cast<double>(n_x) * n_y;
    return fft::inverse_2d(spec);
}

void add_noise(Image& img, const OpticsParams& optics, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (optics.noise_model == NoiseModel::poisson) {
        for (double& v : img.pixels()) {
            std::poisson_distribution<long long> shot(std::max(0.0, v) * optics.shot_photons);
            v = static_cast<double>(shot(rng)) / optics.shot_photons;
        }
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> normal(0.0, sigma);
        for (double& v : img.pixels()) v += normal(rng);
    }
    for (double& v : img.pixels()) v = std::max(0.0, v);
}

void check_request(const SlideModel& model, const CaptureRequest& req) {
    if (!model.contains(req.tile)) throw RangeError("capture tile outside grid");
    if (!(req.noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be non-negative");
    if (!(req.blur_px >= 0.0)) throw ArgumentError("blur_px must be non-negative");
}

} // namespace

Frame render_dual_led(const SlideModel& model, const DefocusGeometry& geom, const OpticsParams& optics,
                      const CaptureRequest& req) {
    check_request(model, req);
    return render_dual_led(model, model.texture(req.tile), geom, optics, req);
}

Frame render_dual_led(const SlideModel& model, const TileTexture& texture, const DefocusGeometry& geom,
                      const OpticsParams& optics, const CaptureRequest& req) {
    check_request(model, req);
    if (req.illumination != Illumination::dual_led) throw ArgumentError("render_dual_led needs dual_led illumination");

    const int n = model.spec().tile_px;
    const double d = std::abs(req.z_stage_um - model.z_true(req.tile));
    const double sep = separation_from_defocus(geom, d);
    const double sigma_coh = kFwhmToSigma * geom.coherence_alpha * d;
    const double sigma_def = kFwhmToSigma * geom.defocus_beta * d;
    const auto box = box_transfer(req.blur_px, n);

    // Half-sum of copies displaced by +-sep/2 along x is a cosine in the x frequency.
    std::vector<double> hx(static_cast<std::size_t>(n / 2 + 1));
    for (int kx = 0; kx <= n / 2; ++kx) {
        const double f = kx / static_cast<double>(n);
        double h = std::cos(M_PI * f * sep) * gaussian_transfer(sigma_coh, f) * gaussian_transfer(sigma_def, f);
        if (req.scan_axis == ScanAxis::x) h *= box[static_cast<std::size_t>(kx)];
        hx[static_cast<std::size_t>(kx)] = h;
    }
    std::vector<double> hy(static_cast<std::size_t>(n));
    for (int ky = 0; ky < n; ++ky) {
        double h = gaussian_transfer(sigma_def, fft::signed_frequency(ky, n));
        if (req.scan_axis == ScanAxis::y) h *= box[static_cast<std::size_t>(ky)];
        hy[static_cast<std::size_t>(ky)] = h;
    }

    const double gain = model.spec().texture_gain * coherent_contrast(model.spec().contrast_mode, d, optics);
    Frame frame;
    frame.pixels = filtered_intensity(texture, gain, optics.background, hx, hy);
    add_noise(frame.pixels, optics, req.noise_sigma, req.seed);
    frame.tile = req.tile;
    frame.z_stage_um = req.z_stage_um;
    frame.blur_px = req.blur_px;
    frame.scan_axis = req.scan_axis;
    frame.illumination = Illumination::dual_led;
    return frame;
}

Frame render_kohler(const SlideModel& model, const TileTexture& texture, const OpticsParams& optics,
                    TileIndex tile, double z_stage_um, double noise_sigma, std::uint64_t seed) {
    if (!model.contains(tile)) throw RangeError("capture tile outside grid");
    const int n = model.spec().tile_px;
    const double sigma = kFwhmToSigma * optics.kohler_gamma * std::abs(z_stage_um - model.z_true(tile));
    std::vector<double> hx(static_cast<std::size_t>(n / 2 + 1));
    for (int kx = 0; kx <= n / 2; ++kx) hx[static_cast<std::size_t>(kx)] = gaussian_transfer(sigma, kx / static_cast<double>(n));
    std::vector<double> hy(static_cast<std::size_t>(n));
    for (int ky = 0; ky < n; ++ky) hy[static_cast<std::size_t>(ky)] = gaussian_transfer(sigma, fft::signed_frequency(ky, n));

    double gain = model.spec().texture_gain;
    if (model.spec().contrast_mode == ContrastMode::transparent) gain *= optics.kohler_transparent_contrast;

    Frame frame;
    frame.pixels = filtered_intensity(texture, gain, optics.background, hx, hy);
    add_noise(frame.pixels, optics, noise_sigma, seed);
    frame.tile = tile;
    frame.z_stage_um = z_stage_um;
    frame.blur_px = 0.0;
    frame.illumination = Illumination::kohler;
    return frame;
}

std::vector<Frame> render_kohler_stack(const SlideModel& model, const OpticsParams& optics, TileIndex tile,
                                       double z_center_um, int n, double step_um, double noise_sigma,
                                       std::uint64_t seed) {
    if (n < 1 || n % 2 == 0) throw ArgumentError("z-stack size must be odd");
    if (!(step_um > 0.0)) throw ArgumentError("z-stack step must be positive");
    if (!model.contains(tile)) throw RangeError("capture tile outside grid");
    const auto texture = model.texture(tile);
    const int half = n / 2;
    std::vector<Frame> stack;
    stack.reserve(static_cast<std::size_t>(n));
    for (int k = -half; k <= half; ++k) {
        stack.push_back(render_kohler(model, texture, optics, tile, z_center_um + k * step_um, noise_sigma,
                                      derive_seed(seed, {stream::kohler, static_cast<std::uint64_t>(k + half)})));
    }
    return stack;
}

} // namespace dualfocus
