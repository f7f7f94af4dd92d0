#pragma once

#include "dualfocus/core.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/slide.hpp"

#include <cstdint>
#include <vector>

namespace dualfocus {

struct ZScore {
    double z_um = 0.0;
    double score = 0.0;
};

struct BrennerResult {
    TileIndex tile;
    /// Reported best focus: the refined value when refinement applied, else the quantized plane.
    double z_best_um = 0.0;
    double z_best_quantized_um = 0.0;
    double z_best_refined_um = 0.0;
    std::vector<ZScore> scores;
    bool refined = false;
};

/// Brenner gradient: sum over rows of (I(x+2, y) - I(x, y))^2, x < width - 2.
double brenner_score(const Image& img);
inline double brenner_score(const Frame& frame) { return brenner_score(frame.pixels); }

struct BrennerOptions {
    int n = 11;
    double step_um = 0.5;
    double noise_sigma = 0.01;
    bool refine = true;
};

/// Argmax of the Brenner score over a Koehler z-stack centred on z_center_um.
/// Ties go to the plane nearest the centre; refinement is a 3-point parabola.
BrennerResult find_focus_brenner(const SlideModel& model, const OpticsParams& optics, TileIndex tile,
                                 double z_center_um, const BrennerOptions& opts = {}, std::uint64_t seed = 0);

/// Same search over precomputed (z, score) pairs sorted by z with uniform spacing.
BrennerResult best_focus_from_scores(std::vector<ZScore> scores, double z_center_um, bool refine);

} // namespace dualfocus
