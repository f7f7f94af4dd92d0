#pragma once

#include "dualfocus/brenner.hpp"
#include "dualfocus/calibration.hpp"
#include "dualfocus/core.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/slide.hpp"
#include "dualfocus/survey.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dualfocus {

/// Published mean +- std focusing error for one cell, printed beside the measurement.
struct ReferenceCell {
    double mean_um = 0.0;
    double std_um = 0.0;
};

struct BenchSlide {
    SlideSpec spec;
    /// One entry per blur level of the default plan; may be empty.
    std::vector<ReferenceCell> reference;
};

struct BenchPlan {
    std::vector<BenchSlide> slides;
    std::vector<double> blur_levels{0.0, 50.0, 90.0, 110.0};
    std::uint64_t seed = 2024;
    DefocusGeometry geometry;
    OpticsParams optics;
    SurveyConfig survey;
    CalibrationOptions calibration;
    bool run_oracle = true;
    BrennerOptions oracle;
    VerifyOptions verify;
    /// Slides processed concurrently; results do not depend on this.
    int workers = 1;

    /// Throws ConfigError: no slides, negative blur, or no static (0) level.
    void validate() const;
};

/// Ten slides: a low-contrast transparent slide, seven stained, one stained
/// variant and one unstained transparent slide; 600 tiles in total.
BenchPlan default_bench_plan();

struct BenchCell {
    double blur_px = 0.0;
    double mean_um = 0.0;
    double std_um = 0.0;
    double fraction_within_dof = 0.0;
    double max_um = 0.0;
    std::size_t n_tiles = 0;
    int rejected = 0;
    int out_of_range = 0;
    std::optional<ReferenceCell> reference;
};

struct BenchSlideResult {
    std::string label;
    ContrastMode contrast_mode = ContrastMode::stained;
    std::size_t n_tiles = 0;
    std::vector<BenchCell> cells;
    std::vector<SurveyReport> reports;
    std::optional<OracleComparison> oracle;
    /// Pipeline failure for this slide; cells are partial when set.
    std::string error;
    std::vector<double> survey_seconds;
    double oracle_seconds = 0.0;
};

struct BenchReport {
    CalibrationCurve calibration;
    std::vector<double> blur_levels;
    std::vector<BenchSlideResult> slides;
    /// Pooled over all tiles of all slides, per blur level.
    std::vector<BenchCell> summary;
    double total_seconds = 0.0;

    bool ok() const;
};

/// A slide failed hard; the report holds every result computed so far.
class BenchFailed : public Error {
public:
    BenchFailed(const std::string& what, BenchReport partial) : Error(what), partial_(std::move(partial)) {}
    const BenchReport& partial_report() const noexcept { return partial_; }

private:
    BenchReport partial_;
};

/// Calibrate (unless `calibration` is given), then survey, verify and
/// optionally run the Brenner oracle for every slide and blur level.
/// Throws BenchFailed after all slides ran if any of them failed.
BenchReport run_bench(const BenchPlan& plan, const std::optional<CalibrationCurve>& calibration = std::nullopt);

/// Flat calibration target sharing the geometry's pixel pitch.
SlideModel calibration_target(const SlideSpec& like, std::uint64_t seed);

/// One row per slide plus a summary row; "mean +- std" cells in um.
void write_bench_csv(std::ostream& os, const BenchReport& report);
/// Wall-clock timings; kept apart from the deterministic outputs.
void write_bench_timings(std::ostream& os, const BenchReport& report);

} // namespace dualfocus
