#pragma once

#include <string>

#include "pcwlad/raster.hpp"

namespace pcwlad {

/// Load an 8/16-bit grayscale or RGB PNG/TIFF/PGM as a [0,1] raster.
/// RGB is converted by channel average. Throws IoError / FormatError.
Raster load_gray(const std::string& path);

/// Write a 16-bit grayscale PNG. With normalize=false samples are clamped to
/// [0,1] and scaled to the full 16-bit range; with normalize=true the raster's
/// min..max is stretched to the full range first (inspection output).
void save_png16(const Raster& r, const std::string& path, bool normalize = false);

/// Raw float grid: 16-byte header {"PCW1", u32 width, u32 height, u32 reserved},
/// then row-major little-endian float32 samples.
void save_pcw1(const Raster& r, const std::string& path);
Raster load_pcw1(const std::string& path);

} // namespace pcwlad
