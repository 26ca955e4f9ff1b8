#include "lamp/tensor.hpp"

#include <cmath>

#include "lamp/errors.hpp"
#include "lamp/rng.hpp"

namespace lamp {

std::string Shape::str() const {
  return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
         std::to_string(width) + ")";
}

Image::Image(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Image::Image(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

void require_same_shape(const Image& a, const Image& b, const char* where) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(where) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

Image& Image::operator+=(const Image& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Image& Image::operator-=(const Image& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Image& Image::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Image operator+(Image a, const Image& b) { return a += b; }
Image operator-(Image a, const Image& b) { return a -= b; }
Image operator*(double s, Image a) { return a *= s; }

Image axpby(double a, const Image& x, double b, const Image& y) {
  require_same_shape(x, y, "axpby");
  Image out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Image& a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

bool all_finite(const Image& a) {
  for (double v : a.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Image standard_normal(Shape shape, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Image out(shape);
  for (auto& v : out.data()) v = n01(rng);
  return out;
}

Image standard_normal(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normal(shape, rng);
}

}  // namespace lamp
