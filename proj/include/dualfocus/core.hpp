#pragma once

#include "dualfocus/image.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace dualfocus {

enum class ContrastMode { stained, transparent };
enum class ScanAxis { x, y };
enum class Illumination { dual_led, kohler };

std::string_view to_string(ContrastMode m);
std::string_view to_string(ScanAxis a);
std::string_view to_string(Illumination i);
ContrastMode contrast_mode_from_string(std::string_view s);
ScanAxis scan_axis_from_string(std::string_view s);
Illumination illumination_from_string(std::string_view s);

struct TileIndex {
    int row = 0;
    int col = 0;
    friend bool operator==(const TileIndex&, const TileIndex&) = default;
};

/// Dual-LED imaging geometry. Lengths along z are in um, lateral in px.
struct DefocusGeometry {
    double z_offset_um = 60.0;
    /// Tilt of each LED from the optical axis (rad); tan = 0.25 by default.
    double led_half_angle_rad = 0.24497866312686414;
    double pixel_pitch_um = 0.275;
    /// Gaussian copy blur (FWHM, px) per um of defocus, along x only.
    double coherence_alpha = 0.05;
    /// Isotropic defocus blur (FWHM, px) per um of defocus.
    double defocus_beta = 0.02;
    double detection_z_min_um = 30.0;
    double detection_z_max_um = 90.0;

    /// Separation slope in px per um of defocus.
    double separation_slope() const;
    /// Throws ConfigError when the offset does not sit inside the detection range.
    void validate() const;

    friend bool operator==(const DefocusGeometry&, const DefocusGeometry&) = default;
};

/// Two-copy separation (px) for a defocus distance d >= 0 (um).
double separation_from_defocus(const DefocusGeometry& geom, double defocus_um);

/// A captured single-channel frame plus capture metadata.
struct Frame {
    Image pixels;
    TileIndex tile;
    double z_stage_um = 0.0;
    double blur_px = 0.0;
    ScanAxis scan_axis = ScanAxis::y;
    Illumination illumination = Illumination::dual_led;
};

} // namespace dualfocus
