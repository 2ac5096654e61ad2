#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mpg/grid.hpp"

namespace mpg {

enum class ImageFormat {
  pgm8,   ///< binary P5, maxval 255
  pgm16,  ///< binary P5, maxval 65535, big-endian samples
  plain,  ///< "width height" header then row-major decimals (lossless)
};

/// Reads P5 (8/16-bit), P2 or the plain float format; the format is detected
/// from the leading bytes. PGM samples are divided by maxval.
/// Throws IoError on unreadable, malformed or truncated input.
ImageGrid read_image(const std::filesystem::path& path);
ImageGrid read_image(std::istream& in);

/// Writes `grid` in `format`. PGM output clamps to [0,1] and rounds to the
/// nearest code; the plain format round-trips every double bit-exactly.
void write_image(const ImageGrid& grid, const std::filesystem::path& path,
                 ImageFormat format);
void write_image(const ImageGrid& grid, std::ostream& out, ImageFormat format);

/// Picks a format from the file extension: .pgm -> pgm8, anything else ->
/// plain.
ImageFormat format_for_path(const std::filesystem::path& path);

}  // namespace mpg
