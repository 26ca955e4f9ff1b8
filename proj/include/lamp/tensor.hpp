#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lamp {

struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense (channels, height, width) array of doubles, row-major.
/// Values are nominally in [0,1] but never clamped here.
class Image {
 public:
  Image() = default;
  explicit Image(Shape shape, double fill = 0.0);
  Image(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  Image& operator+=(const Image& o);
  Image& operator-=(const Image& o);
  Image& operator*=(double s);

  bool operator==(const Image& o) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Image operator+(Image a, const Image& b);
Image operator-(Image a, const Image& b);
Image operator*(double s, Image a);

/// a*x + b*y, evaluated elementwise in that order.
Image axpby(double a, const Image& x, double b, const Image& y);

double dot(const Image& a, const Image& b);
double norm2(const Image& a);
double max_abs_diff(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);
bool all_finite(const Image& a);

void require_same_shape(const Image& a, const Image& b, const char* where);

}  // namespace lamp
