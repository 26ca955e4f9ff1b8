#include "lamp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "lamp/errors.hpp"

namespace lamp::fft {
namespace {

// FFTW planning is not thread-safe; execution with new-array execute is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t h, std::size_t w, int sign) {
    std::lock_guard lock(mu_);
    const auto key = std::make_tuple(h, w, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<fftw_complex> scratch(h * w);
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), scratch.data(),
                                   scratch.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w, int sign) {
  const std::size_t n = h * w;
  if (in.size() != n || out.size() != n) throw ShapeError("fft: plane size mismatch");
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  auto* buf = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(cache().get(h, w, sign), buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
}

}  // namespace

void forward(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w) {
  run(in, out, h, w, FFTW_FORWARD);
}

void inverse(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w) {
  run(in, out, h, w, FFTW_BACKWARD);
}

}  // namespace lamp::fft
