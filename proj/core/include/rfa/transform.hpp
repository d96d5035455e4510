#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace rfa {

// Fixed-size discrete Fourier transform. Implementations own their scratch
// buffers, so one instance must not be used from two threads at once.
class SpectralTransform {
 public:
  virtual ~SpectralTransform() = default;

  virtual std::size_t size() const noexcept = 0;

  // out[k] = sum_n in[n] * exp(-2*pi*i*k*n/N)
  virtual void forward(std::span<const std::complex<double>> in,
                       std::span<std::complex<double>> out) = 0;

  // out[n] = sum_k in[k] * exp(+2*pi*i*k*n/N), unnormalized.
  virtual void inverse(std::span<const std::complex<double>> in,
                       std::span<std::complex<double>> out) = 0;
};

// FFTW-backed transform (estimate-mode plans, deterministic output).
std::unique_ptr<SpectralTransform> make_fft(std::size_t n);

}  // namespace rfa
