#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lamp/tensor.hpp"

namespace lamp {

enum class OperatorKind { gaussian_blur, motion_blur, block_sr, dense };

std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

/// Coordinates of an image or measurement in an operator's singular bases.
using SpectralVector = std::vector<std::complex<double>>;

/// Square blur kernel with odd side length; taps sum to 1.
struct Kernel {
  std::size_t size = 1;
  std::vector<double> taps;  // row-major size x size

  double tap(std::size_t row, std::size_t col) const { return taps[row * size + col]; }
  double sum() const;
  Image as_image() const;
};

Kernel gaussian_kernel(std::size_t size, double sigma);

/// Random-walk motion path of size-1 unit steps whose heading drifts by
/// intensity-scaled Gaussian increments, bilinearly rasterized around the
/// kernel centre and normalized. intensity = 0 gives a horizontal line.
Kernel motion_kernel(std::size_t size, double intensity, std::uint64_t seed);

/// Linear forward operator K = U diag(a) V^H with explicit access to its
/// singular bases.
///
/// Input spectral coordinate i (0 <= i < in_dim) carries singular value
/// spectrum()[i]. For i < min(in_dim, out_dim) it pairs with measurement
/// coordinate i; later input coordinates lie in the null space. Spectral
/// vectors of real images are conjugate-symmetric where the basis is
/// complex, so from_spectral returns the real part.
class SpectralOperator {
 public:
  virtual ~SpectralOperator() = default;

  OperatorKind kind() const { return kind_; }
  const Shape& in_shape() const { return in_shape_; }
  const Shape& out_shape() const { return out_shape_; }
  std::size_t in_dim() const { return in_shape_.size(); }
  std::size_t out_dim() const { return out_shape_.size(); }
  std::size_t paired_dim() const { return std::min(in_dim(), out_dim()); }

  const std::vector<double>& spectrum() const { return spectrum_; }
  /// Singular values at or below this count as zero (1e-10 * max a_i).
  double zero_tolerance() const { return zero_tol_; }

  virtual Image apply(const Image& x) const = 0;
  virtual Image adjoint(const Image& y) const = 0;

  /// V^H x
  virtual SpectralVector to_spectral(const Image& x) const = 0;
  /// V x_bar
  virtual Image from_spectral(const SpectralVector& xb) const = 0;
  /// U^H y
  virtual SpectralVector to_spectral_out(const Image& y) const = 0;
  /// U y_bar
  virtual Image from_spectral_out(const SpectralVector& yb) const = 0;

  /// Two operators with equal ids share the same right-singular basis V.
  virtual std::string basis_id() const = 0;

 protected:
  SpectralOperator(OperatorKind kind, Shape in, Shape out);
  void set_spectrum(std::vector<double> a);
  void check_in(const Image& x, const char* where) const;
  void check_out(const Image& y, const char* where) const;

 private:
  OperatorKind kind_;
  Shape in_shape_;
  Shape out_shape_;
  std::vector<double> spectrum_;
  double zero_tol_ = 0.0;
};

using OperatorPtr = std::shared_ptr<const SpectralOperator>;

/// Circular convolution with a centred kernel, diagonalized by the 2-D DFT.
class ConvolutionOperator final : public SpectralOperator {
 public:
  ConvolutionOperator(OperatorKind kind, Shape shape, Kernel kernel);

  const Kernel& kernel() const { return kernel_; }

  Image apply(const Image& x) const override;
  Image adjoint(const Image& y) const override;
  SpectralVector to_spectral(const Image& x) const override;
  Image from_spectral(const SpectralVector& xb) const override;
  SpectralVector to_spectral_out(const Image& y) const override;
  Image from_spectral_out(const SpectralVector& yb) const override;
  std::string basis_id() const override;

 private:
  SpectralVector transform_planes(const Image& img) const;
  Image inverse_planes(SpectralVector coeffs) const;

  Kernel kernel_;
  SpectralVector khat_;   // per-plane transfer function (h*w)
  SpectralVector phase_;  // khat / |khat|, 1 where khat vanishes
};

/// r x r block averaging followed by downsampling. Input basis per block is
/// the orthonormal 2-D DCT-II; its DC vector (1/r) is the only observed
/// direction, with singular value 1/r.
class BlockAverageOperator final : public SpectralOperator {
 public:
  BlockAverageOperator(Shape shape, std::size_t factor);

  std::size_t factor() const { return r_; }

  Image apply(const Image& x) const override;
  Image adjoint(const Image& y) const override;
  SpectralVector to_spectral(const Image& x) const override;
  Image from_spectral(const SpectralVector& xb) const override;
  SpectralVector to_spectral_out(const Image& y) const override;
  Image from_spectral_out(const SpectralVector& yb) const override;
  std::string basis_id() const override;

 private:
  std::size_t block_index(std::size_t c, std::size_t by, std::size_t bx) const;
  std::size_t coeff_index(std::size_t block, std::size_t basis) const;

  std::size_t r_;
  std::vector<double> dct_;  // r x r 1-D orthonormal DCT-II matrix, row = frequency
};

/// Explicit matrix with a full SVD; used for small verification problems.
class DenseOperator final : public SpectralOperator {
 public:
  DenseOperator(Eigen::MatrixXd matrix, Shape in, Shape out);

  const Eigen::MatrixXd& matrix() const { return m_; }

  Image apply(const Image& x) const override;
  Image adjoint(const Image& y) const override;
  SpectralVector to_spectral(const Image& x) const override;
  Image from_spectral(const SpectralVector& xb) const override;
  SpectralVector to_spectral_out(const Image& y) const override;
  Image from_spectral_out(const SpectralVector& yb) const override;
  std::string basis_id() const override;

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd v_;
};

std::shared_ptr<ConvolutionOperator> make_gaussian_blur(Shape shape, std::size_t kernel_size,
                                                        double sigma);
std::shared_ptr<ConvolutionOperator> make_motion_blur(Shape shape, std::size_t kernel_size,
                                                      double intensity, std::uint64_t seed);
std::shared_ptr<BlockAverageOperator> make_block_sr(Shape shape, std::size_t factor);
std::shared_ptr<BlockAverageOperator> make_identity(Shape shape);
std::shared_ptr<DenseOperator> make_dense(Eigen::MatrixXd matrix, Shape in, Shape out);

/// U diag(a) V^H x evaluated through the spectral maps only.
Image apply_via_spectrum(const SpectralOperator& op, const Image& x);

/// Pseudo-inverse: y_bar_i / a_i where a_i exceeds the zero tolerance, 0 elsewhere.
Image pinv_apply(const SpectralOperator& op, const Image& y);

/// Largest input/output dimension dense_oracle will materialize.
inline constexpr std::size_t kDenseOracleLimit = 4096;

/// Explicit out_dim x in_dim matrix, built column by column from apply().
Eigen::MatrixXd dense_oracle(const SpectralOperator& op);
/// Explicit in_dim x out_dim matrix, built from adjoint().
Eigen::MatrixXd dense_adjoint_oracle(const SpectralOperator& op);

Eigen::VectorXd to_eigen(const Image& x);
Image from_eigen(const Eigen::VectorXd& v, Shape shape);

}  // namespace lamp
