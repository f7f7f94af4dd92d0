#pragma once

#include "dualfocus/core.hpp"
#include "dualfocus/slide.hpp"

#include <cstdint>
#include <vector>

namespace dualfocus {

enum class NoiseModel { gaussian, poisson };

std::string_view to_string(NoiseModel m);
NoiseModel noise_model_from_string(std::string_view s);

/// Simulator parameters not tied to the LED geometry.
struct OpticsParams {
    /// Defocus (um) at which a transparent specimen reaches half its coherent contrast.
    double transparent_dc_um = 20.0;
    /// Koehler blur FWHM (px) per um of defocus.
    double kohler_gamma = 1.0;
    /// Residual in-focus contrast of transparent specimens under Koehler light.
    double kohler_transparent_contrast = 0.1;
    /// Unscattered background intensity under every illumination.
    double background = 0.2;
    NoiseModel noise_model = NoiseModel::gaussian;
    /// Photons per unit intensity for the shot-noise model.
    double shot_photons = 1.0e4;

    void validate() const;
    friend bool operator==(const OpticsParams&, const OpticsParams&) = default;
};

struct CaptureRequest {
    TileIndex tile;
    double z_stage_um = 0.0;
    double blur_px = 0.0;
    ScanAxis scan_axis = ScanAxis::y;
    Illumination illumination = Illumination::dual_led;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;
};

/// Dual-LED contrast factor c(d): 1 for stained, d / (d + d_c) for transparent.
double coherent_contrast(ContrastMode mode, double defocus_um, const OpticsParams& optics);

/// Normalized symmetric box taps for a blur of `length_px`; tap i sits at offset i - (taps.size() - 1) / 2.
std::vector<double> box_kernel_taps(double length_px);

/// Direct circular box blur along one axis (spatial domain).
Image box_blur(const Image& img, double length_px, ScanAxis axis);

Frame render_dual_led(const SlideModel& model, const DefocusGeometry& geom, const OpticsParams& optics,
                      const CaptureRequest& req);
/// Same as above with a texture already generated for req.tile.
Frame render_dual_led(const SlideModel& model, const TileTexture& texture, const DefocusGeometry& geom,
                      const OpticsParams& optics, const CaptureRequest& req);

/// One Koehler (incoherent, single-copy) frame at stage position z_stage_um.
Frame render_kohler(const SlideModel& model, const TileTexture& texture, const OpticsParams& optics,
                    TileIndex tile, double z_stage_um, double noise_sigma, std::uint64_t seed);

/// n Koehler frames at z_center + k * step, k = -(n-1)/2 .. (n-1)/2. n must be odd.
std::vector<Frame> render_kohler_stack(const SlideModel& model, const OpticsParams& optics, TileIndex tile,
                                       double z_center_um, int n = 11, double step_um = 0.5,
                                       double noise_sigma = 0.01, std::uint64_t seed = 0);

} // namespace dualfocus
