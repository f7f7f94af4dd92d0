#include "dualfocus/core.hpp"
#include "dualfocus/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace dualfocus {

std::string_view to_string(ContrastMode m) {
    return m == ContrastMode::stained ? "stained" : "transparent";
}

std::string_view to_string(ScanAxis a) { return a == ScanAxis::x ? "x" : "y"; }

std::string_view to_string(Illumination i) {
    return i == Illumination::dual_led ? "dual_led" : "kohler";
}

ContrastMode contrast_mode_from_string(std::string_view s) {
    if (s == "stained") return ContrastMode::stained;
    if (s == "transparent") return ContrastMode::transparent;
    throw ConfigError("unknown contrast mode '" + std::string(s) + "'");
}

ScanAxis scan_axis_from_string(std::string_view s) {
    if (s == "x") return ScanAxis::x;
    if (s == "y") return ScanAxis::y;
    throw ConfigError("unknown scan axis '" + std::string(s) + "'");
}

Illumination illumination_from_string(std::string_view s) {
    if (s == "dual_led") return Illumination::dual_led;
    if (s == "kohler") return Illumination::kohler;
    throw ConfigError("unknown illumination '" + std::string(s) + "'");
}

double DefocusGeometry::separation_slope() const {
    return 2.0 * std::tan(led_half_angle_rad) / pixel_pitch_um;
}

void DefocusGeometry::validate() const {
    if (!(z_offset_um > 0.0)) throw ConfigError("z_offset must be positive");
    if (!(detection_z_min_um < z_offset_um && z_offset_um < detection_z_max_um))
        throw ConfigError("z_offset must lie strictly inside the detection range");
    if (!(pixel_pitch_um > 0.0)) throw ConfigError("pixel_pitch must be positive");
    if (!(led_half_angle_rad > 0.0 && led_half_angle_rad < M_PI / 2))
        throw ConfigError("led_half_angle must be in (0, pi/2)");
    if (coherence_alpha < 0.0 || defocus_beta < 0.0)
        throw ConfigError("blur coefficients must be non-negative");
}

double separation_from_defocus(const DefocusGeometry& geom, double defocus_um) {
    if (!(defocus_um >= 0.0))
        throw DomainError("defocus must be non-negative (sign is unobservable)");
    return geom.separation_slope() * defocus_um;
}

double mean(const Image& img) {
    auto px = img.pixels();
    if (px.empty()) return 0.0;
    return std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
}

double stddev(const Image& img) {
    auto px = img.pixels();
    if (px.size() < 2) return 0.0;
    const double m = mean(img);
    double ss = 0.0;
    for (double v : px) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(px.size()));
}

} // namespace dualfocus
