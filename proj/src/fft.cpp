#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace vocbench::detail {

namespace {
// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int size) : size_(size) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(static_cast<std::size_t>(size));
  spectrum_ = fftw_alloc_complex(static_cast<std::size_t>(size / 2 + 1));
  forward_plan_ = fftw_plan_dft_r2c_1d(size, real_, spectrum_, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(size, spectrum_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_plan_);
  fftw_destroy_plan(inverse_plan_);
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = std::min(in.size(), static_cast<std::size_t>(size_));
  std::copy_n(in.begin(), n, real_);
  std::fill(real_ + n, real_ + size_, 0.0);
  fftw_execute(forward_plan_);
  std::memcpy(static_cast<void*>(out.data()), spectrum_, sizeof(fftw_complex) * (size_ / 2 + 1));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  // c2r destroys its input, so it always runs on the owned copy.
  std::memcpy(spectrum_, in.data(), sizeof(fftw_complex) * (size_ / 2 + 1));
  fftw_execute(inverse_plan_);
  std::copy_n(real_, size_, out.begin());
}

RealFft& RealFft::for_size(int size) {
  thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[size];
  if (!slot) slot = std::make_unique<RealFft>(size);
  return *slot;
}

}  // namespace vocbench::detail
