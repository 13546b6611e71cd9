#include "hommax/grid.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace hommax {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

std::mutex plan_mutex;

const PlanPair& plans_for(const GridShape& shape) {
  static std::map<std::array<int, 3>, PlanPair> cache;
  std::lock_guard lock(plan_mutex);
  auto it = cache.find(shape.n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> scratch(shape.size());
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair pair{
      fftw_plan_dft_3d(shape[0], shape[1], shape[2], p, p, FFTW_FORWARD, flags),
      fftw_plan_dft_3d(shape[0], shape[1], shape[2], p, p, FFTW_BACKWARD, flags)};
  return cache.emplace(shape.n, pair).first->second;
}

}  // namespace

void fft_forward(const GridShape& shape, std::span<cplx> data) {
  if (data.size() != shape.size()) throw InputError("fft_forward: size mismatch");
  if (shape.size() == 1) return;
  const PlanPair& pp = plans_for(shape);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(pp.forward, p, p);
  const double scale = 1.0 / static_cast<double>(shape.size());
  for (cplx& c : data) c *= scale;
}

void fft_backward(const GridShape& shape, std::span<cplx> data) {
  if (data.size() != shape.size()) throw InputError("fft_backward: size mismatch");
  if (shape.size() == 1) return;
  const PlanPair& pp = plans_for(shape);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(pp.backward, p, p);
}

void resample_coefficients(const GridShape& from, std::span<const cplx> src, const GridShape& to,
                           std::span<cplx> dst) {
  if (src.size() != from.size() || dst.size() != to.size()) {
    throw InputError("resample_coefficients: size mismatch");
  }
  std::fill(dst.begin(), dst.end(), cplx(0.0));
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto k = from.wavenumbers(i);
    if (to.contains_wavenumber(k)) dst[to.index_of_wavenumber(k)] = src[i];
  }
}

}  // namespace hommax
