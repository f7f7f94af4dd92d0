#include "dualfocus/brenner.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/shift_estimator.hpp"

#include <cmath>

namespace dualfocus {

double brenner_score(const Image& img) {
    const int w = img.width();
    if (w < 3) throw ArgumentError("Brenner gradient needs at least 3 columns");
    double total = 0.0;
    for (int y = 0; y < img.height(); ++y) {
        auto row = img.row(y);
        for (int x = 0; x + 2 < w; ++x) {
            const double d = row[static_cast<std::size_t>(x + 2)] - row[static_cast<std::size_t>(x)];
            total += d * d;
        }
    }
    return total;
}

BrennerResult best_focus_from_scores(std::vector<ZScore> scores, double z_center_um, bool refine) {
    if (scores.empty()) throw ArgumentError("empty Brenner stack");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].score > scores[best].score ||
            (scores[i].score == scores[best].score &&
             std::abs(scores[i].z_um - z_center_um) < std::abs(scores[best].z_um - z_center_um)))
            best = i;
    }
    BrennerResult res;
    res.scores = std::move(scores);
    res.z_best_quantized_um = res.scores[best].z_um;
    res.z_best_refined_um = res.z_best_quantized_um;
    if (refine && best > 0 && best + 1 < res.scores.size()) {
        const double step = res.scores[best + 1].z_um - res.scores[best].z_um;
        const double off = parabolic_vertex(res.scores[best - 1].score, res.scores[best].score, res.scores[best + 1].score);
        res.z_best_refined_um = res.z_best_quantized_um + off * step;
        res.refined = true;
    }
    res.z_best_um = res.refined ? res.z_best_refined_um : res.z_best_quantized_um;
    return res;
}

BrennerResult find_focus_brenner(const SlideModel& model, const OpticsParams& optics, TileIndex tile,
                                 double z_center_um, const BrennerOptions& opts, std::uint64_t seed) {
    const auto stack = render_kohler_stack(model, optics, tile, z_center_um, opts.n, opts.step_um, opts.noise_sigma, seed);
    std::vector<ZScore> scores;
    scores.reserve(stack.size());
    for (const auto& f : stack) scores.push_back({f.z_stage_um, brenner_score(f)});
    auto res = best_focus_from_scores(std::move(scores), z_center_um, opts.refine);
    res.tile = tile;
    return res;
}

} // namespace dualfocus
