#pragma once

#include "dualfocus/core.hpp"
#include "dualfocus/fft.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dualfocus {

/// Parameters of a synthetic specimen. Serialized; the sampled fields are not.
struct SlideSpec {
    std::string label = "slide";
    int rows = 10;
    int cols = 10;
    int tile_px = 512;
    double pixel_pitch_um = 0.275;
    ContrastMode contrast_mode = ContrastMode::stained;
    /// Gaussian low-pass (sigma, px) applied to the white-noise texture.
    double texture_sigma_px = 1.0;
    /// Scales texture amplitude; < 1 gives low-contrast specimens.
    double texture_gain = 1.0;
    double topo_amplitude_um = 8.0;
    /// Upper bound on |z_true| difference between 4-neighbour tiles.
    double adjacent_limit_um = 1.5;
    /// Correlation length (tiles) of the random bumps added to the polynomial tilt.
    double bump_correlation_tiles = 1.5;

    void validate() const;
    int tile_count() const noexcept { return rows * cols; }

    friend bool operator==(const SlideSpec&, const SlideSpec&) = default;
};

/// Texture of one tile: normalized to [0, 1], periodic, with its 2D spectrum.
struct TileTexture {
    Image spatial;
    fft::Spectrum2d spectrum;
};

/// Synthetic slide: a procedural per-tile texture plus sampled topography.
///
/// Tile textures are regenerated on demand from (seed, tile), so a model for
/// hundreds of 512 px tiles stays small. Immutable after construction.
class SlideModel {
public:
    SlideModel(SlideSpec spec, std::uint64_t seed, std::vector<double> topography_um);

    const SlideSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<double>& topography() const noexcept { return topography_; }

    bool contains(TileIndex t) const noexcept;
    /// True in-focus stage position of a tile centre (um). Throws RangeError.
    double z_true(TileIndex t) const;
    TileTexture texture(TileIndex t) const;

    double max_adjacent_step() const;
    double max_abs_height() const;

    /// Copy of this model with every tile height shifted by dz_um.
    SlideModel displaced(double dz_um) const;

private:
    SlideSpec spec_;
    std::uint64_t seed_;
    std::vector<double> topography_;
};

SlideModel generate_slide(const SlideSpec& spec, std::uint64_t seed);

/// Serpentine (boustrophedon) visiting order over the grid.
std::vector<TileIndex> serpentine_order(int rows, int cols);

} // namespace dualfocus
