#pragma once

// Scalar and vector pixel fields plus the discrete differential operators
// shared by every solver.
//
// Boundary convention: forward differences with a zero difference on the
// last column/row (replicate/Neumann). divergence() is the exact negative
// adjoint of gradient(), so <grad u, q> = -<u, div q> holds structurally and
// laplacian() = divergence(gradient(.)).

#include <cstddef>
#include <span>
#include <vector>

#include "mpg/error.hpp"

namespace mpg {

class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int width, int height, double fill = 0.0);
  ImageGrid(int width, int height, std::vector<double> data);

  static ImageGrid constant(int width, int height, double value) {
    return ImageGrid(width, height, value);
  }
  static ImageGrid zeros_like(const ImageGrid& other) {
    return ImageGrid(other.width(), other.height(), 0.0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(int row, int col) { return data_[index(row, col)]; }
  double at(int row, int col) const { return data_[index(row, col)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const ImageGrid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Per-pixel 2-vector field, stored as two row-major component planes.
class VectorField {
 public:
  VectorField() = default;
  VectorField(int width, int height);
  VectorField(int width, int height, std::vector<double> dx,
              std::vector<double> dy);

  static VectorField zeros_like(const ImageGrid& g) {
    return VectorField(g.width(), g.height());
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return dx_.size(); }

  std::span<double> dx() noexcept { return dx_; }
  std::span<double> dy() noexcept { return dy_; }
  std::span<const double> dx() const noexcept { return dx_; }
  std::span<const double> dy() const noexcept { return dy_; }

  double magnitude(std::size_t i) const noexcept;
  double max_magnitude() const noexcept;

  bool same_shape(const ImageGrid& g) const noexcept {
    return width_ == g.width() && height_ == g.height();
  }
  bool same_shape(const VectorField& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> dx_;
  std::vector<double> dy_;
};

// Differential operators.
VectorField gradient(const ImageGrid& u);
ImageGrid divergence(const VectorField& q);
ImageGrid laplacian(const ImageGrid& u);

/// Isotropic total variation sum_i |grad u_i|.
double total_variation(const ImageGrid& u);

// Pointwise arithmetic. All binary forms throw ShapeError on mismatched
// dimensions; div, log and sqrt throw DomainError outside their domain.
ImageGrid add(const ImageGrid& a, const ImageGrid& b);
ImageGrid sub(const ImageGrid& a, const ImageGrid& b);
ImageGrid mul(const ImageGrid& a, const ImageGrid& b);
ImageGrid div(const ImageGrid& a, const ImageGrid& b);
ImageGrid max(const ImageGrid& a, const ImageGrid& b);
ImageGrid max(const ImageGrid& a, double floor);
ImageGrid log(const ImageGrid& a);
ImageGrid sqrt(const ImageGrid& a);
ImageGrid scale(const ImageGrid& a, double s);

double inner(const ImageGrid& a, const ImageGrid& b);
double inner(const VectorField& p, const VectorField& q);
double norm(const ImageGrid& a);
double norm(const VectorField& p);
double min_entry(const ImageGrid& a);
double max_entry(const ImageGrid& a);
double sum(const ImageGrid& a);

VectorField add(const VectorField& p, const VectorField& q);
VectorField sub(const VectorField& p, const VectorField& q);
VectorField scale(const VectorField& p, double s);

inline ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) { return add(a, b); }
inline ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) { return sub(a, b); }
inline ImageGrid operator*(double s, const ImageGrid& a) { return scale(a, s); }

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where);
void require_same_shape(const ImageGrid& a, const VectorField& b, const char* where);

}  // namespace mpg
