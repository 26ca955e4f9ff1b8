#include "lamp/linops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lamp/errors.hpp"
#include "lamp/fft.hpp"

namespace lamp {

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::gaussian_blur: return "gaussian_blur";
    case OperatorKind::motion_blur: return "motion_blur";
    case OperatorKind::block_sr: return "block_sr";
    case OperatorKind::dense: return "dense";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "gaussian_blur") return OperatorKind::gaussian_blur;
  if (s == "motion_blur") return OperatorKind::motion_blur;
  if (s == "block_sr") return OperatorKind::block_sr;
  if (s == "dense") return OperatorKind::dense;
  throw ConfigError("kind", "unknown operator kind '" + s +
                                "' (expected gaussian_blur, motion_blur, block_sr, dense)");
}

// ---------------------------------------------------------------- kernels

double Kernel::sum() const {
  double s = 0.0;
  for (double v : taps) s += v;
  return s;
}

Image Kernel::as_image() const { return Image(Shape{1, size, size}, taps); }

namespace {

void check_kernel_size(std::size_t size) {
  if (size == 0 || size % 2 == 0) throw ConfigError("kernel_size", "must be a positive odd integer");
}

void normalize(Kernel& k) {
  const double s = k.sum();
  for (auto& v : k.taps) v /= s;
}

}  // namespace

Kernel gaussian_kernel(std::size_t size, double sigma) {
  check_kernel_size(size);
  if (!(sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
  Kernel k{size, std::vector<double>(size * size)};
  const double c = static_cast<double>(size / 2);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double dy = static_cast<double>(i) - c;
      const double dx = static_cast<double>(j) - c;
      k.taps[i * size + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  normalize(k);
  return k;
}

Kernel motion_kernel(std::size_t size, double intensity, std::uint64_t seed) {
  check_kernel_size(size);
  if (!(intensity >= 0.0 && intensity <= 1.0)) throw ConfigError("intensity", "must lie in [0,1]");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t steps = size - 1;
  std::vector<double> px{0.0}, py{0.0};
  double heading = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    heading += intensity * 0.5 * n01(rng);
    px.push_back(px.back() + std::cos(heading));
    py.push_back(py.back() + std::sin(heading));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    mx += px[i];
    my += py[i];
  }
  mx /= static_cast<double>(px.size());
  my /= static_cast<double>(py.size());
  const double half = static_cast<double>(size / 2);
  double extent = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] -= mx;
    py[i] -= my;
    extent = std::max({extent, std::abs(px[i]), std::abs(py[i])});
  }
  const double scale = extent > half ? half / extent : 1.0;

  Kernel k{size, std::vector<double>(size * size, 0.0)};
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double x = std::clamp(half + scale * px[i], 0.0, static_cast<double>(size - 1));
    const double y = std::clamp(half + scale * py[i], 0.0, static_cast<double>(size - 1));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const std::size_t x1 = std::min(x0 + 1, size - 1);
    const std::size_t y1 = std::min(y0 + 1, size - 1);
    k.taps[y0 * size + x0] += (1 - fx) * (1 - fy);
    k.taps[y0 * size + x1] += fx * (1 - fy);
    k.taps[y1 * size + x0] += (1 - fx) * fy;
    k.taps[y1 * size + x1] += fx * fy;
  }
  normalize(k);
  return k;
}

// ---------------------------------------------------------------- base

SpectralOperator::SpectralOperator(OperatorKind kind, Shape in, Shape out)
    : kind_(kind), in_shape_(in), out_shape_(out) {}

void SpectralOperator::set_spectrum(std::vector<double> a) {
  spectrum_ = std::move(a);
  const double amax = spectrum_.empty() ? 0.0 : *std::max_element(spectrum_.begin(), spectrum_.end());
  zero_tol_ = 1e-10 * amax;
}

void SpectralOperator::check_in(const Image& x, const char* where) const {
  if (x.shape() != in_shape_) {
    throw ShapeError(std::string(where) + ": expected input shape " + in_shape_.str() + ", got " +
                     x.shape().str());
  }
}

void SpectralOperator::check_out(const Image& y, const char* where) const {
  if (y.shape() != out_shape_) {
    throw ShapeError(std::string(where) + ": expected measurement shape " + out_shape_.str() +
                     ", got " + y.shape().str());
  }
}

namespace {

void check_len(const SpectralVector& v, std::size_t n, const char* where) {
  if (v.size() != n) {
    throw ShapeError(std::string(where) + ": expected " + std::to_string(n) +
                     " spectral coefficients, got " + std::to_string(v.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------- convolution

ConvolutionOperator::ConvolutionOperator(OperatorKind kind, Shape shape, Kernel kernel)
    : SpectralOperator(kind, shape, shape), kernel_(std::move(kernel)) {
  check_kernel_size(kernel_.size);
  if (kernel_.size > std::min(shape.height, shape.width)) {
    throw ConfigError("kernel_size", "kernel " + std::to_string(kernel_.size) +
                                         " larger than image " + shape.str());
  }
  const std::size_t h = shape.height, w = shape.width, c = kernel_.size / 2;
  SpectralVector padded(h * w, 0.0);
  for (std::size_t i = 0; i < kernel_.size; ++i) {
    for (std::size_t j = 0; j < kernel_.size; ++j) {
      const std::size_t y = (i + h - c) % h;
      const std::size_t x = (j + w - c) % w;
      padded[y * w + x] += kernel_.tap(i, j);
    }
  }
  khat_.resize(h * w);
  fft::forward(padded, khat_, h, w);
  const double root_n = std::sqrt(static_cast<double>(h * w));
  for (auto& v : khat_) v *= root_n;

  phase_.resize(h * w);
  std::vector<double> a(shape.size());
  for (std::size_t k = 0; k < h * w; ++k) {
    const double mag = std::abs(khat_[k]);
    phase_[k] = mag > 0.0 ? khat_[k] / mag : std::complex<double>(1.0, 0.0);
    for (std::size_t ch = 0; ch < shape.channels; ++ch) a[ch * h * w + k] = mag;
  }
  set_spectrum(std::move(a));
}

SpectralVector ConvolutionOperator::transform_planes(const Image& img) const {
  const Shape& s = in_shape();
  SpectralVector out(img.data().begin(), img.data().end());
  for (std::size_t ch = 0; ch < s.channels; ++ch) {
    std::span<std::complex<double>> plane(out.data() + ch * s.plane(), s.plane());
    fft::forward(plane, plane, s.height, s.width);
  }
  return out;
}

Image ConvolutionOperator::inverse_planes(SpectralVector coeffs) const {
  const Shape& s = in_shape();
  Image out(s);
  for (std::size_t ch = 0; ch < s.channels; ++ch) {
    std::span<std::complex<double>> plane(coeffs.data() + ch * s.plane(), s.plane());
    fft::inverse(plane, plane, s.height, s.width);
  }
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = coeffs[i].real();
  return out;
}

Image ConvolutionOperator::apply(const Image& x) const {
  check_in(x, "apply");
  auto f = transform_planes(x);
  const std::size_t p = in_shape().plane();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= khat_[i % p];
  return inverse_planes(std::move(f));
}

Image ConvolutionOperator::adjoint(const Image& y) const {
  check_out(y, "adjoint");
  auto f = transform_planes(y);
  const std::size_t p = in_shape().plane();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::conj(khat_[i % p]);
  return inverse_planes(std::move(f));
}

SpectralVector ConvolutionOperator::to_spectral(const Image& x) const {
  check_in(x, "to_spectral");
  return transform_planes(x);
}

Image ConvolutionOperator::from_spectral(const SpectralVector& xb) const {
  check_len(xb, in_dim(), "from_spectral");
  return inverse_planes(xb);
}

SpectralVector ConvolutionOperator::to_spectral_out(const Image& y) const {
  check_out(y, "to_spectral_out");
  auto f = transform_planes(y);
  const std::size_t p = in_shape().plane();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::conj(phase_[i % p]);
  return f;
}

Image ConvolutionOperator::from_spectral_out(const SpectralVector& yb) const {
  check_len(yb, out_dim(), "from_spectral_out");
  SpectralVector f = yb;
  const std::size_t p = in_shape().plane();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= phase_[i % p];
  return inverse_planes(std::move(f));
}

std::string ConvolutionOperator::basis_id() const { return "fourier" + in_shape().str(); }

// ---------------------------------------------------------------- block average

BlockAverageOperator::BlockAverageOperator(Shape shape, std::size_t factor)
    : SpectralOperator(OperatorKind::block_sr, shape,
                       Shape{shape.channels, factor ? shape.height / factor : 0,
                             factor ? shape.width / factor : 0}),
      r_(factor) {
  if (factor == 0) throw ConfigError("factor", "must be a positive integer");
  if (shape.height % factor != 0 || shape.width % factor != 0) {
    throw ConfigError("factor", "image " + shape.str() + " not divisible by " +
                                    std::to_string(factor));
  }
  dct_.resize(r_ * r_);
  const double rr = static_cast<double>(r_);
  for (std::size_t u = 0; u < r_; ++u) {
    const double cu = u == 0 ? std::sqrt(1.0 / rr) : std::sqrt(2.0 / rr);
    for (std::size_t i = 0; i < r_; ++i) {
      dct_[u * r_ + i] =
          cu * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                        static_cast<double>(u) / (2.0 * rr));
    }
  }
  std::vector<double> a(in_dim(), 0.0);
  std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(out_dim()), 1.0 / rr);
  set_spectrum(std::move(a));
}

std::size_t BlockAverageOperator::block_index(std::size_t c, std::size_t by, std::size_t bx) const {
  return (c * out_shape().height + by) * out_shape().width + bx;
}

std::size_t BlockAverageOperator::coeff_index(std::size_t block, std::size_t basis) const {
  if (basis == 0) return block;
  return out_dim() + block * (r_ * r_ - 1) + (basis - 1);
}

Image BlockAverageOperator::apply(const Image& x) const {
  check_in(x, "apply");
  Image y(out_shape());
  const double inv = 1.0 / static_cast<double>(r_ * r_);
  for (std::size_t c = 0; c < out_shape().channels; ++c) {
    for (std::size_t by = 0; by < out_shape().height; ++by) {
      for (std::size_t bx = 0; bx < out_shape().width; ++bx) {
        double s = 0.0;
        for (std::size_t i = 0; i < r_; ++i) {
          for (std::size_t j = 0; j < r_; ++j) s += x.at(c, by * r_ + i, bx * r_ + j);
        }
        y.at(c, by, bx) = s * inv;
      }
    }
  }
  return y;
}

Image BlockAverageOperator::adjoint(const Image& y) const {
  check_out(y, "adjoint");
  Image x(in_shape());
  const double inv = 1.0 / static_cast<double>(r_ * r_);
  for (std::size_t c = 0; c < in_shape().channels; ++c) {
    for (std::size_t i = 0; i < in_shape().height; ++i) {
      for (std::size_t j = 0; j < in_shape().width; ++j) x.at(c, i, j) = y.at(c, i / r_, j / r_) * inv;
    }
  }
  return x;
}

SpectralVector BlockAverageOperator::to_spectral(const Image& x) const {
  check_in(x, "to_spectral");
  SpectralVector out(in_dim());
  for (std::size_t c = 0; c < out_shape().channels; ++c) {
    for (std::size_t by = 0; by < out_shape().height; ++by) {
      for (std::size_t bx = 0; bx < out_shape().width; ++bx) {
        const std::size_t b = block_index(c, by, bx);
        for (std::size_t u = 0; u < r_; ++u) {
          for (std::size_t v = 0; v < r_; ++v) {
            double s = 0.0;
            for (std::size_t i = 0; i < r_; ++i) {
              for (std::size_t j = 0; j < r_; ++j) {
                s += dct_[u * r_ + i] * dct_[v * r_ + j] * x.at(c, by * r_ + i, bx * r_ + j);
              }
            }
            out[coeff_index(b, u * r_ + v)] = s;
          }
        }
      }
    }
  }
  return out;
}

Image BlockAverageOperator::from_spectral(const SpectralVector& xb) const {
  check_len(xb, in_dim(), "from_spectral");
  Image x(in_shape());
  for (std::size_t c = 0; c < out_shape().channels; ++c) {
    for (std::size_t by = 0; by < out_shape().height; ++by) {
      for (std::size_t bx = 0; bx < out_shape().width; ++bx) {
        const std::size_t b = block_index(c, by, bx);
        for (std::size_t u = 0; u < r_; ++u) {
          for (std::size_t v = 0; v < r_; ++v) {
            const double coef = xb[coeff_index(b, u * r_ + v)].real();
            for (std::size_t i = 0; i < r_; ++i) {
              for (std::size_t j = 0; j < r_; ++j) {
                x.at(c, by * r_ + i, bx * r_ + j) += dct_[u * r_ + i] * dct_[v * r_ + j] * coef;
              }
            }
          }
        }
      }
    }
  }
  return x;
}

SpectralVector BlockAverageOperator::to_spectral_out(const Image& y) const {
  check_out(y, "to_spectral_out");
  return SpectralVector(y.data().begin(), y.data().end());
}

Image BlockAverageOperator::from_spectral_out(const SpectralVector& yb) const {
  check_len(yb, out_dim(), "from_spectral_out");
  Image y(out_shape());
  for (std::size_t i = 0; i < yb.size(); ++i) y[i] = yb[i].real();
  return y;
}

std::string BlockAverageOperator::basis_id() const {
  return "block_dct" + std::to_string(r_) + in_shape().str();
}

// ---------------------------------------------------------------- dense

DenseOperator::DenseOperator(Eigen::MatrixXd matrix, Shape in, Shape out)
    : SpectralOperator(OperatorKind::dense, in, out), m_(std::move(matrix)) {
  if (static_cast<std::size_t>(m_.rows()) != out.size() ||
      static_cast<std::size_t>(m_.cols()) != in.size()) {
    throw ShapeError("dense operator: matrix is " + std::to_string(m_.rows()) + "x" +
                     std::to_string(m_.cols()) + ", shapes need " + std::to_string(out.size()) +
                     "x" + std::to_string(in.size()));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  u_ = svd.matrixU();
  v_ = svd.matrixV();
  std::vector<double> a(in.size(), 0.0);
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) a[static_cast<std::size_t>(i)] = sv(i);
  set_spectrum(std::move(a));
}

Image DenseOperator::apply(const Image& x) const {
  check_in(x, "apply");
  return from_eigen(m_ * to_eigen(x), out_shape());
}

Image DenseOperator::adjoint(const Image& y) const {
  check_out(y, "adjoint");
  return from_eigen(m_.transpose() * to_eigen(y), in_shape());
}

namespace {

SpectralVector to_complex(const Eigen::VectorXd& v) {
  return SpectralVector(v.data(), v.data() + v.size());
}

Eigen::VectorXd real_part(const SpectralVector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].real();
  return out;
}

}  // namespace

SpectralVector DenseOperator::to_spectral(const Image& x) const {
  check_in(x, "to_spectral");
  return to_complex(v_.transpose() * to_eigen(x));
}

Image DenseOperator::from_spectral(const SpectralVector& xb) const {
  check_len(xb, in_dim(), "from_spectral");
  return from_eigen(v_ * real_part(xb), in_shape());
}

SpectralVector DenseOperator::to_spectral_out(const Image& y) const {
  check_out(y, "to_spectral_out");
  return to_complex(u_.transpose() * to_eigen(y));
}

Image DenseOperator::from_spectral_out(const SpectralVector& yb) const {
  check_len(yb, out_dim(), "from_spectral_out");
  return from_eigen(u_ * real_part(yb), out_shape());
}

std::string DenseOperator::basis_id() const {
  std::ostringstream os;
  os << "dense@" << static_cast<const void*>(this);
  return os.str();
}

// ---------------------------------------------------------------- factories

std::shared_ptr<ConvolutionOperator> make_gaussian_blur(Shape shape, std::size_t kernel_size,
                                                        double sigma) {
  return std::make_shared<ConvolutionOperator>(OperatorKind::gaussian_blur, shape,
                                               gaussian_kernel(kernel_size, sigma));
}

std::shared_ptr<ConvolutionOperator> make_motion_blur(Shape shape, std::size_t kernel_size,
                                                      double intensity, std::uint64_t seed) {
  return std::make_shared<ConvolutionOperator>(OperatorKind::motion_blur, shape,
                                               motion_kernel(kernel_size, intensity, seed));
}

std::shared_ptr<BlockAverageOperator> make_block_sr(Shape shape, std::size_t factor) {
  return std::make_shared<BlockAverageOperator>(shape, factor);
}

std::shared_ptr<BlockAverageOperator> make_identity(Shape shape) {
  return std::make_shared<BlockAverageOperator>(shape, 1);
}

std::shared_ptr<DenseOperator> make_dense(Eigen::MatrixXd matrix, Shape in, Shape out) {
  return std::make_shared<DenseOperator>(std::move(matrix), in, out);
}

// ---------------------------------------------------------------- free functions

Image apply_via_spectrum(const SpectralOperator& op, const Image& x) {
  const auto xb = op.to_spectral(x);
  const auto& a = op.spectrum();
  SpectralVector yb(op.out_dim(), 0.0);
  for (std::size_t i = 0; i < op.paired_dim(); ++i) yb[i] = a[i] * xb[i];
  return op.from_spectral_out(yb);
}

Image pinv_apply(const SpectralOperator& op, const Image& y) {
  const auto yb = op.to_spectral_out(y);
  const auto& a = op.spectrum();
  SpectralVector xb(op.in_dim(), 0.0);
  for (std::size_t i = 0; i < op.paired_dim(); ++i) {
    if (a[i] > op.zero_tolerance()) xb[i] = yb[i] / a[i];
  }
  return op.from_spectral(xb);
}

namespace {

void guard_dense(const SpectralOperator& op) {
  if (op.in_dim() > kDenseOracleLimit || op.out_dim() > kDenseOracleLimit) {
    throw ConfigError("dense_oracle", "operator dimension exceeds " +
                                          std::to_string(kDenseOracleLimit));
  }
}

}  // namespace

Eigen::MatrixXd dense_oracle(const SpectralOperator& op) {
  guard_dense(op);
  Eigen::MatrixXd m(op.out_dim(), op.in_dim());
  Image e(op.in_shape());
  for (std::size_t j = 0; j < op.in_dim(); ++j) {
    e[j] = 1.0;
    m.col(static_cast<Eigen::Index>(j)) = to_eigen(op.apply(e));
    e[j] = 0.0;
  }
  return m;
}

Eigen::MatrixXd dense_adjoint_oracle(const SpectralOperator& op) {
  guard_dense(op);
  Eigen::MatrixXd m(op.in_dim(), op.out_dim());
  Image e(op.out_shape());
  for (std::size_t j = 0; j < op.out_dim(); ++j) {
    e[j] = 1.0;
    m.col(static_cast<Eigen::Index>(j)) = to_eigen(op.adjoint(e));
    e[j] = 0.0;
  }
  return m;
}

Eigen::VectorXd to_eigen(const Image& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data().data(), static_cast<Eigen::Index>(x.size()));
}

Image from_eigen(const Eigen::VectorXd& v, Shape shape) {
  return Image(shape, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace lamp
