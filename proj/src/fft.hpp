#pragma once

#include <fftw3.h>

#include <complex>
#include <span>

namespace vocbench::detail {

/// Real-input FFT of a fixed size backed by FFTW. Each instance owns its
/// aligned buffers and plans, so repeated transforms are bit-identical.
/// Not shareable across threads; use RealFft::for_size() for a thread-local one.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const noexcept { return size_; }

  /// in.size() <= size (zero-padded); out.size() == size/2 + 1.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);

  /// Unnormalized inverse: out = size * x for x = forward^-1(in).
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

  static RealFft& for_size(int size);

 private:
  int size_;
  double* real_;
  fftw_complex* spectrum_;
  fftw_plan forward_plan_;
  fftw_plan inverse_plan_;
};

}  // namespace vocbench::detail
