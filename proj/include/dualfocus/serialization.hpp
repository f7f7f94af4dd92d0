#pragma once

// JSON forms of the public types (nlohmann ADL hooks). Objects carry a
// `units` sibling naming the unit of every dimensional field; readers ignore
// it and fall back to defaults for absent fields.

#include "dualfocus/bench.hpp"
#include "dualfocus/brenner.hpp"
#include "dualfocus/calibration.hpp"
#include "dualfocus/core.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/slide.hpp"
#include "dualfocus/survey.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace dualfocus {

using nlohmann::json;

void to_json(json& j, const TileIndex& t);
void from_json(const json& j, TileIndex& t);
void to_json(json& j, const LagWindow& w);
void from_json(const json& j, LagWindow& w);
void to_json(json& j, const SlideSpec& s);
void from_json(const json& j, SlideSpec& s);
void to_json(json& j, const DefocusGeometry& g);
void from_json(const json& j, DefocusGeometry& g);
void to_json(json& j, const OpticsParams& o);
void from_json(const json& j, OpticsParams& o);
void to_json(json& j, const SurveyConfig& c);
void from_json(const json& j, SurveyConfig& c);
void to_json(json& j, const CalibrationPoint& p);
void from_json(const json& j, CalibrationPoint& p);
void to_json(json& j, const CalibrationCurve& c);
void from_json(const json& j, CalibrationCurve& c);
void to_json(json& j, const FocusEntry& e);
void from_json(const json& j, FocusEntry& e);
void to_json(json& j, const FocusMap& m);
void from_json(const json& j, FocusMap& m);
void to_json(json& j, const SurveyReport& r);
void to_json(json& j, const BrennerResult& r);
void to_json(json& j, const BenchCell& c);
void to_json(json& j, const BenchReport& r);
/// Overlays `j` on the default plan; a `slides` array replaces the roster.
void from_json(const json& j, BenchPlan& p);

/// Parse a JSON file; throws IoError with the path on failure.
json read_json_file(const std::string& path);
/// Write `j` pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const json& j);

/// CSV: row,col,z_focus_um,quality,source,out_of_range
void write_focus_map_csv(std::ostream& os, const FocusMap& map);
/// CSV: row,col,z_best,z_best_refined
void write_oracle_csv(std::ostream& os, const std::vector<BrennerResult>& results);

/// Fixed-precision decimal used for every CSV number (byte-stable output).
std::string format_number(double v, int precision = 6);

} // namespace dualfocus
