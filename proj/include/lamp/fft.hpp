#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace lamp::fft {

using cplx = std::complex<double>;

/// Unitary 2-D DFT of one h x w plane (scaled by 1/sqrt(h*w)).
/// `in` and `out` may alias.
void forward(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w);
void inverse(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w);

}  // namespace lamp::fft
