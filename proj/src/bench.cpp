#include "dualfocus/bench.hpp"
#include "dualfocus/parallel.hpp"
#include "dualfocus/seed.hpp"
#include "dualfocus/serialization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace dualfocus {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

BenchSlide make_slide(std::string label, int rows, int cols, ContrastMode mode, std::vector<ReferenceCell> ref) {
    BenchSlide s;
    s.spec.label = std::move(label);
    s.spec.rows = rows;
    s.spec.cols = cols;
    s.spec.contrast_mode = mode;
    s.reference = std::move(ref);
    return s;
}

BenchCell pool_cells(double blur, const std::vector<const SurveyReport*>& reports) {
    BenchCell cell;
    cell.blur_px = blur;
    std::vector<double> residuals;
    std::size_t in_dof = 0;
    for (const auto* r : reports) {
        for (const auto& t : r->tiles) {
            residuals.push_back(t.residual_um);
            if (t.residual_um <= r->dof_um / 2.0) ++in_dof;
        }
    }
    cell.n_tiles = residuals.size();
    if (residuals.empty()) return cell;
    double sum = 0.0;
    for (double v : residuals) sum += v;
    cell.mean_um = sum / static_cast<double>(residuals.size());
    double ss = 0.0;
    for (double v : residuals) ss += (v - cell.mean_um) * (v - cell.mean_um);
    cell.std_um = residuals.size() > 1 ? std::sqrt(ss / static_cast<double>(residuals.size() - 1)) : 0.0;
    cell.max_um = *std::max_element(residuals.begin(), residuals.end());
    cell.fraction_within_dof = static_cast<double>(in_dof) / static_cast<double>(residuals.size());
    return cell;
}

std::string mean_pm_std(double mean, double sd) { return format_number(mean, 3) + " +- " + format_number(sd, 3); }

std::string blur_column(double blur) {
    if (blur == 0.0) return "static";
    return "blur_" + format_number(blur, blur == std::floor(blur) ? 0 : 1) + "px";
}

} // namespace

void BenchPlan::validate() const {
    if (slides.empty()) throw ConfigError("bench plan has no slides");
    for (double b : blur_levels)
        if (!(b >= 0.0)) throw ConfigError("blur levels must be non-negative");
    if (std::find(blur_levels.begin(), blur_levels.end(), 0.0) == blur_levels.end())
        throw ConfigError("bench plan needs a static (0 px) blur level");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    for (const auto& s : slides) s.spec.validate();
}

BenchPlan default_bench_plan() {
    BenchPlan plan;
    auto& s = plan.slides;
    s.push_back(make_slide("ihc-transparent", 10, 10, ContrastMode::transparent,
                           {{0.13, 0.10}, {0.17, 0.10}, {0.14, 0.08}, {0.13, 0.11}}));
    s.back().spec.texture_gain = 0.6;
    const std::vector<std::vector<ReferenceCell>> he_refs{
        {{0.07, 0.07}, {0.07, 0.06}, {0.13, 0.12}, {0.17, 0.12}},
        {{0.06, 0.05}, {0.07, 0.05}, {0.11, 0.06}, {0.18, 0.13}},
        {{0.06, 0.05}, {0.05, 0.05}, {0.23, 0.14}, {0.11, 0.12}},
        {{0.10, 0.08}, {0.10, 0.10}, {0.24, 0.10}, {0.17, 0.11}},
        {{0.07, 0.07}, {0.19, 0.08}, {0.17, 0.07}, {0.20, 0.13}},
        {{0.07, 0.06}, {0.07, 0.08}, {0.12, 0.10}, {0.11, 0.07}},
        {{0.04, 0.04}, {0.16, 0.05}, {0.08, 0.06}, {0.18, 0.08}},
    };
    for (std::size_t i = 0; i < he_refs.size(); ++i)
        s.push_back(make_slide("he-" + std::to_string(i + 1), 5, 10, ContrastMode::stained, he_refs[i]));
    s.push_back(make_slide("myocardial-variant", 5, 10, ContrastMode::stained,
                           {{0.10, 0.09}, {0.20, 0.07}, {0.14, 0.08}, {0.20, 0.14}}));
    s.back().spec.texture_sigma_px = 1.5;
    s.push_back(make_slide("kidney-unstained", 10, 10, ContrastMode::transparent,
                           {{0.06, 0.06}, {0.06, 0.05}, {0.11, 0.07}, {0.21, 0.12}}));
    return plan;
}

bool BenchReport::ok() const {
    return std::all_of(slides.begin(), slides.end(), [](const BenchSlideResult& s) { return s.error.empty(); });
}

SlideModel calibration_target(const SlideSpec& like, std::uint64_t seed) {
    SlideSpec spec = like;
    spec.label = "calibration-target";
    spec.rows = 1;
    spec.cols = 4;
    spec.topo_amplitude_um = 0.0;
    return SlideModel(spec, seed, std::vector<double>(static_cast<std::size_t>(spec.tile_count()), 0.0));
}

BenchReport run_bench(const BenchPlan& plan, const std::optional<CalibrationCurve>& calibration) {
    plan.validate();
    const auto t0 = Clock::now();
    BenchReport report;
    report.blur_levels = plan.blur_levels;

    if (calibration) {
        report.calibration = *calibration;
    } else {
        SlideSpec like = plan.slides.front().spec;
        like.contrast_mode = ContrastMode::stained;
        like.texture_sigma_px = SlideSpec{}.texture_sigma_px;
        like.texture_gain = SlideSpec{}.texture_gain;
        const auto target = calibration_target(like, derive_seed(plan.seed, {stream::calibration, 0}));
        report.calibration = run_calibration(target, plan.geometry, plan.optics, plan.calibration,
                                             derive_seed(plan.seed, {stream::calibration, 1}));
    }
    const CalibrationCurve& curve = report.calibration;

    report.slides.resize(plan.slides.size());
    parallel_for(plan.slides.size(), plan.workers, [&](std::size_t i) {
        const auto& bs = plan.slides[i];
        BenchSlideResult& out = report.slides[i];
        out.label = bs.spec.label;
        out.contrast_mode = bs.spec.contrast_mode;
        out.n_tiles = static_cast<std::size_t>(bs.spec.tile_count());
        try {
            const auto model = generate_slide(bs.spec, derive_seed(plan.seed, {stream::slide, i}));
            std::optional<FocusMap> static_map;
            for (std::size_t b = 0; b < plan.blur_levels.size(); ++b) {
                SurveyConfig cfg = plan.survey;
                cfg.blur_px = plan.blur_levels[b];
                cfg.seed = derive_seed(plan.seed, {stream::survey, i, b});
                cfg.workers = 1;
                const auto ts = Clock::now();
                auto run = run_survey(model, plan.geometry, plan.optics, curve, cfg);
                out.survey_seconds.push_back(seconds_since(ts));
                auto rep = verify_acquisition(model, run.map, plan.verify);
                BenchCell cell = pool_cells(cfg.blur_px, {&rep});
                cell.rejected = run.rejected;
                cell.out_of_range = run.out_of_range;
                if (b < bs.reference.size()) cell.reference = bs.reference[b];
                out.cells.push_back(cell);
                if (cfg.blur_px == 0.0 && !static_map) static_map = run.map;
                out.reports.push_back(std::move(rep));
            }
            if (plan.run_oracle && static_map) {
                const auto to = Clock::now();
                std::vector<BrennerResult> oracle;
                for (int r = 0; r < model.spec().rows; ++r)
                    for (int c = 0; c < model.spec().cols; ++c)
                        oracle.push_back(find_focus_brenner(
                            model, plan.optics, {r, c}, static_map->at({r, c}).z_focus_um, plan.oracle,
                            derive_seed(plan.seed, {stream::kohler, i, static_cast<std::uint64_t>(r),
                                                    static_cast<std::uint64_t>(c)})));
                out.oracle = verify_acquisition(model, *static_map, plan.verify, &oracle).oracle;
                out.oracle_seconds = seconds_since(to);
            }
        } catch (const Error& e) {
            out.error = e.what();
        }
    });

    for (std::size_t b = 0; b < plan.blur_levels.size(); ++b) {
        std::vector<const SurveyReport*> reports;
        int rejected = 0;
        int out_of_range = 0;
        for (const auto& s : report.slides) {
            if (b < s.reports.size()) reports.push_back(&s.reports[b]);
            if (b < s.cells.size()) {
                rejected += s.cells[b].rejected;
                out_of_range += s.cells[b].out_of_range;
            }
        }
        BenchCell cell = pool_cells(plan.blur_levels[b], reports);
        cell.rejected = rejected;
        cell.out_of_range = out_of_range;
        report.summary.push_back(cell);
    }
    report.total_seconds = seconds_since(t0);

    if (!report.ok()) {
        std::string what = "bench failed:";
        for (const auto& s : report.slides)
            if (!s.error.empty()) what += " [" + s.label + ": " + s.error + "]";
        throw BenchFailed(what, std::move(report));
    }
    return report;
}

void write_bench_csv(std::ostream& os, const BenchReport& report) {
    os << "slide,n_tiles";
    for (double b : report.blur_levels) os << ',' << blur_column(b);
    for (double b : report.blur_levels) os << ",reference_" << blur_column(b);
    os << '\n';
    auto row = [&](const std::string& label, std::size_t n, const std::vector<BenchCell>& cells) {
        os << label << ',' << n;
        for (std::size_t b = 0; b < report.blur_levels.size(); ++b)
            os << ',' << (b < cells.size() ? mean_pm_std(cells[b].mean_um, cells[b].std_um) : std::string("failed"));
        for (std::size_t b = 0; b < report.blur_levels.size(); ++b) {
            os << ',';
            if (b < cells.size() && cells[b].reference)
                os << mean_pm_std(cells[b].reference->mean_um, cells[b].reference->std_um);
        }
        os << '\n';
    };
    std::size_t total = 0;
    for (const auto& s : report.slides) {
        row(s.label, s.n_tiles, s.cells);
        total += s.n_tiles;
    }
    // Reference summary: the published pooled row for the default roster.
    std::vector<BenchCell> summary = report.summary;
    const ReferenceCell pooled[] = {{0.08, 0.07}, {0.11, 0.07}, {0.14, 0.09}, {0.17, 0.11}};
    const double default_levels[] = {0.0, 50.0, 90.0, 110.0};
    for (std::size_t b = 0; b < summary.size() && b < 4; ++b)
        if (summary[b].blur_px == default_levels[b]) summary[b].reference = pooled[b];
    row("summary", total, summary);
}

void write_bench_timings(std::ostream& os, const BenchReport& report) {
    os << "slide";
    for (double b : report.blur_levels) os << ",survey_s_" << blur_column(b);
    os << ",oracle_s\n";
    for (const auto& s : report.slides) {
        os << s.label;
        for (std::size_t b = 0; b < report.blur_levels.size(); ++b)
            os << ',' << (b < s.survey_seconds.size() ? format_number(s.survey_seconds[b], 3) : std::string());
        os << ',' << format_number(s.oracle_seconds, 3) << '\n';
    }
    os << "total," << format_number(report.total_seconds, 3) << '\n';
}

} // namespace dualfocus
