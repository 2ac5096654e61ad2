#include "mpg/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "mpg/error.hpp"

namespace mpg {

namespace {

// Skips whitespace and '#' comments as allowed between PGM header tokens.
void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& in, const char* what) {
  skip_pgm_space(in);
  std::string token;
  while (in.peek() != EOF && std::isdigit(in.peek())) {
    token.push_back(static_cast<char>(in.get()));
  }
  if (token.empty() || token.size() > 9) {
    throw IoError(std::string("pgm: malformed header (") + what + ")");
  }
  return std::stol(token);
}

void check_dims(long w, long h) {
  if (w <= 0 || h <= 0 || w > 1 << 15 || h > 1 << 15) {
    throw IoError("image: dimensions " + std::to_string(w) + "x" +
                  std::to_string(h) + " out of range");
  }
}

ImageGrid read_pgm(std::istream& in) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
    throw IoError("pgm: unsupported magic (expected P5 or P2)");
  }
  const bool binary = magic[1] == '5';
  const long w = read_header_int(in, "width");
  const long h = read_header_int(in, "height");
  const long maxval = read_header_int(in, "maxval");
  check_dims(w, h);
  if (maxval < 1 || maxval > 65535) {
    throw IoError("pgm: maxval must lie in [1, 65535]");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> data(n);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) {
      throw IoError("pgm: malformed header (missing raster separator)");
    }
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError("pgm: truncated payload");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bytes_per == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      if (v > static_cast<unsigned>(maxval)) {
        throw IoError("pgm: sample exceeds maxval");
      }
      data[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      skip_pgm_space(in);
      if (in.peek() == EOF) throw IoError("pgm: truncated payload");
      const long v = read_header_int(in, "sample");
      if (v > maxval) throw IoError("pgm: sample exceeds maxval");
      data[i] = v * scale;
    }
  }
  return ImageGrid(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

bool next_token(std::istream& in, std::string& token) {
  token.clear();
  return static_cast<bool>(in >> token);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw IoError("plain image: bad value '" + token + "'");
  }
  return v;
}

ImageGrid read_plain(std::istream& in) {
  std::string token;
  long dims[2] = {};
  for (long& d : dims) {
    if (!next_token(in, token)) throw IoError("plain image: malformed header");
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), d);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw IoError("plain image: malformed header '" + token + "'");
    }
  }
  check_dims(dims[0], dims[1]);
  const std::size_t n =
      static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_token(in, token)) {
      throw IoError("plain image: truncated payload (" + std::to_string(i) +
                    " of " + std::to_string(n) + " values)");
    }
    data[i] = parse_double(token);
  }
  if (next_token(in, token)) {
    throw IoError("plain image: trailing data after " + std::to_string(n) +
                  " values");
  }
  return ImageGrid(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                   std::move(data));
}

}  // namespace

ImageGrid read_image(std::istream& in) {
  while (in.peek() != EOF && std::isspace(in.peek())) in.get();
  const int first = in.peek();
  if (first == EOF) throw IoError("image: empty input");
  if (first == 'P') return read_pgm(in);
  if (std::isdigit(first)) return read_plain(in);
  throw IoError("image: unsupported magic");
}

ImageGrid read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_image(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_image(const ImageGrid& grid, std::ostream& out, ImageFormat format) {
  if (grid.empty()) throw IoError("write_image: empty grid");
  if (format == ImageFormat::plain) {
    out << grid.width() << ' ' << grid.height() << '\n';
    char buf[32];
    for (int r = 0; r < grid.height(); ++r) {
      for (int c = 0; c < grid.width(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", grid.at(r, c));
        if (c) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  } else {
    const unsigned maxval = format == ImageFormat::pgm16 ? 65535 : 255;
    out << "P5\n" << grid.width() << ' ' << grid.height() << '\n' << maxval << '\n';
    std::vector<unsigned char> raw;
    raw.reserve(grid.size() * (maxval > 255 ? 2 : 1));
    for (double x : grid) {
      const double clamped = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 1.0);
      const auto v = static_cast<unsigned>(std::lround(clamped * maxval));
      if (maxval > 255) raw.push_back(static_cast<unsigned char>(v >> 8));
      raw.push_back(static_cast<unsigned char>(v & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  }
  if (!out) throw IoError("write_image: stream write failed");
}

void write_image(const ImageGrid& grid, const std::filesystem::path& path,
                 ImageFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_image(grid, out, format);
  out.close();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

ImageFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".pgm" ? ImageFormat::pgm8 : ImageFormat::plain;
}

}  // namespace mpg
