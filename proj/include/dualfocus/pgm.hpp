#pragma once

#include "dualfocus/image.hpp"

#include <string>

namespace dualfocus {

/// Intensity mapped to the maximum grey level on export.
inline constexpr double kPgmFullScale = 2.0;

/// Binary P5, 16-bit big-endian, maxval 65535. Values are clamped to [0, full_scale].
void write_pgm(const std::string& path, const Image& img, double full_scale = kPgmFullScale);

/// Reads 8- or 16-bit P5 and rescales grey levels to [0, full_scale]. Throws IoError.
Image read_pgm(const std::string& path, double full_scale = kPgmFullScale);

} // namespace dualfocus
