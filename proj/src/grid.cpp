#include "mpg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mpg {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw ShapeError("grid dimensions must be positive, got " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
}

std::string dims(int w, int h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

template <class Op>
ImageGrid zip(const ImageGrid& a, const ImageGrid& b, const char* where, Op op) {
  require_same_shape(a, b, where);
  ImageGrid out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

template <class Op>
ImageGrid map(const ImageGrid& a, Op op) {
  ImageGrid out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i]);
  return out;
}

void require_same_shape(const VectorField& p, const VectorField& q,
                        const char* where) {
  if (!p.same_shape(q)) {
    throw ShapeError(std::string(where) + ": shape mismatch " +
                     dims(p.width(), p.height()) + " vs " +
                     dims(q.width(), q.height()));
  }
}

}  // namespace

ImageGrid::ImageGrid(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageGrid::ImageGrid(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match " + dims(width, height));
  }
}

bool ImageGrid::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

VectorField::VectorField(int width, int height)
    : width_(width), height_(height) {
  check_dims(width, height);
  const auto n = static_cast<std::size_t>(width) * height;
  dx_.assign(n, 0.0);
  dy_.assign(n, 0.0);
}

VectorField::VectorField(int width, int height, std::vector<double> dx,
                         std::vector<double> dy)
    : width_(width), height_(height), dx_(std::move(dx)), dy_(std::move(dy)) {
  check_dims(width, height);
  const auto n = static_cast<std::size_t>(width) * height;
  if (dx_.size() != n || dy_.size() != n) {
    throw ShapeError("vector field components do not match " +
                     dims(width, height));
  }
}

double VectorField::magnitude(std::size_t i) const noexcept {
  return std::hypot(dx_[i], dy_[i]);
}

double VectorField::max_magnitude() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < dx_.size(); ++i) m = std::max(m, magnitude(i));
  return m;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b,
                        const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(where) + ": shape mismatch " +
                     dims(a.width(), a.height()) + " vs " +
                     dims(b.width(), b.height()));
  }
}

void require_same_shape(const ImageGrid& a, const VectorField& b,
                        const char* where) {
  if (!b.same_shape(a)) {
    throw ShapeError(std::string(where) + ": shape mismatch " +
                     dims(a.width(), a.height()) + " vs " +
                     dims(b.width(), b.height()));
  }
}

VectorField gradient(const ImageGrid& u) {
  const int w = u.width();
  const int h = u.height();
  VectorField g(w, h);
  auto gx = g.dx();
  auto gy = g.dy();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      gx[i] = c + 1 < w ? u[i + 1] - u[i] : 0.0;
      gy[i] = r + 1 < h ? u[i + w] - u[i] : 0.0;
    }
  }
  return g;
}

ImageGrid divergence(const VectorField& q) {
  const int w = q.width();
  const int h = q.height();
  ImageGrid d(w, h);
  auto qx = q.dx();
  auto qy = q.dy();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      double v = 0.0;
      if (c + 1 < w) v += qx[i];
      if (c > 0) v -= qx[i - 1];
      if (r + 1 < h) v += qy[i];
      if (r > 0) v -= qy[i - w];
      d[i] = v;
    }
  }
  return d;
}

ImageGrid laplacian(const ImageGrid& u) { return divergence(gradient(u)); }

double total_variation(const ImageGrid& u) {
  const auto g = gradient(u);
  double tv = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) tv += g.magnitude(i);
  return tv;
}

ImageGrid add(const ImageGrid& a, const ImageGrid& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

ImageGrid sub(const ImageGrid& a, const ImageGrid& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

ImageGrid mul(const ImageGrid& a, const ImageGrid& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

ImageGrid div(const ImageGrid& a, const ImageGrid& b) {
  return zip(a, b, "div", [](double x, double y) {
    if (y == 0.0) throw DomainError("div: zero denominator");
    return x / y;
  });
}

ImageGrid max(const ImageGrid& a, const ImageGrid& b) {
  return zip(a, b, "max", [](double x, double y) { return std::max(x, y); });
}

ImageGrid max(const ImageGrid& a, double floor) {
  return map(a, [floor](double x) { return std::max(x, floor); });
}

ImageGrid log(const ImageGrid& a) {
  return map(a, [](double x) {
    if (!(x > 0.0)) throw DomainError("log: nonpositive entry");
    return std::log(x);
  });
}

ImageGrid sqrt(const ImageGrid& a) {
  return map(a, [](double x) {
    if (!(x >= 0.0)) throw DomainError("sqrt: negative entry");
    return std::sqrt(x);
  });
}

ImageGrid scale(const ImageGrid& a, double s) {
  return map(a, [s](double x) { return s * x; });
}

double inner(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "inner");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inner(const VectorField& p, const VectorField& q) {
  require_same_shape(p, q, "inner");
  double acc = 0.0;
  auto px = p.dx(), py = p.dy(), qx = q.dx(), qy = q.dy();
  for (std::size_t i = 0; i < p.size(); ++i) acc += px[i] * qx[i] + py[i] * qy[i];
  return acc;
}

double norm(const ImageGrid& a) { return std::sqrt(inner(a, a)); }
double norm(const VectorField& p) { return std::sqrt(inner(p, p)); }

double min_entry(const ImageGrid& a) {
  return *std::min_element(a.begin(), a.end());
}

double max_entry(const ImageGrid& a) {
  return *std::max_element(a.begin(), a.end());
}

double sum(const ImageGrid& a) {
  double acc = 0.0;
  for (double x : a) acc += x;
  return acc;
}

VectorField add(const VectorField& p, const VectorField& q) {
  require_same_shape(p, q, "add");
  VectorField out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.dx()[i] = p.dx()[i] + q.dx()[i];
    out.dy()[i] = p.dy()[i] + q.dy()[i];
  }
  return out;
}

VectorField sub(const VectorField& p, const VectorField& q) {
  require_same_shape(p, q, "sub");
  VectorField out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.dx()[i] = p.dx()[i] - q.dx()[i];
    out.dy()[i] = p.dy()[i] - q.dy()[i];
  }
  return out;
}

VectorField scale(const VectorField& p, double s) {
  VectorField out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.dx()[i] = s * p.dx()[i];
    out.dy()[i] = s * p.dy()[i];
  }
  return out;
}

}  // namespace mpg
