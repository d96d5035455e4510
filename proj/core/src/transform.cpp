#include "rfa/transform.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace rfa {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwTransform final : public SpectralTransform {
 public:
  explicit FftwTransform(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("transform size must be positive");
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    if (in_ == nullptr || out_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    const int size = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(size, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_1d(size, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~FftwTransform() override {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(in_);
    fftw_free(out_);
  }

  FftwTransform(const FftwTransform&) = delete;
  FftwTransform& operator=(const FftwTransform&) = delete;

  std::size_t size() const noexcept override { return n_; }

  void forward(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) override {
    run(forward_, in, out);
  }

  void inverse(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) override {
    run(inverse_, in, out);
  }

 private:
  void run(fftw_plan plan, std::span<const std::complex<double>> in,
           std::span<std::complex<double>> out) {
    if (in.size() != n_ || out.size() != n_) {
      throw std::invalid_argument("transform buffer size mismatch");
    }
    auto* staging = reinterpret_cast<std::complex<double>*>(in_);
    std::copy(in.begin(), in.end(), staging);
    fftw_execute(plan);
    const auto* result = reinterpret_cast<const std::complex<double>*>(out_);
    std::copy(result, result + n_, out.begin());
  }

  std::size_t n_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace

std::unique_ptr<SpectralTransform> make_fft(std::size_t n) {
  return std::make_unique<FftwTransform>(n);
}

}  // namespace rfa
