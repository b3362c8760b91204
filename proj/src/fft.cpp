#include "chromacode/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace chromacode::fft {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    if (p) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}
FftwBuffer<double> alloc_real(std::size_t n) { return FftwBuffer<double>(fftw_alloc_real(n)); }

fftw_plan complex_plan(int rows, int cols, Direction dir) {
  static std::map<std::tuple<int, int, int>, PlanPtr> cache;
  std::lock_guard lock(planner_mutex());
  auto key = std::make_tuple(rows, cols, dir == Direction::Forward ? 0 : 1);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second.get();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  auto buf = alloc_complex(n);
  fftw_plan p = fftw_plan_dft_2d(rows, cols, buf.get(), buf.get(),
                                 dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
  cache.emplace(key, PlanPtr(p));
  return p;
}

}  // namespace

void dft2d(std::span<Complex> data, int rows, int cols, Direction dir) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (rows <= 0 || cols <= 0 || data.size() != n) throw std::invalid_argument("dft2d: bad shape");
  fftw_plan plan = complex_plan(rows, cols, dir);
  auto buf = alloc_complex(n);
  std::memcpy(buf.get(), data.data(), n * sizeof(fftw_complex));
  fftw_execute_dft(plan, buf.get(), buf.get());
  std::memcpy(data.data(), buf.get(), n * sizeof(fftw_complex));
}

int fast_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

struct Convolver::Impl {
  int width = 0, height = 0;
  int pad_x = 0, pad_y = 0;
  int fft_w = 0, fft_h = 0;
  std::vector<Complex> kernel_spectrum;
  std::vector<Complex> flipped_spectrum;
  PlanPtr forward;
  PlanPtr inverse;

  std::size_t real_size() const { return static_cast<std::size_t>(fft_h) * fft_w; }
  std::size_t spec_size() const { return static_cast<std::size_t>(fft_h) * (fft_w / 2 + 1); }

  std::vector<Complex> spectrum_of(const Image& k, bool flip) const {
    auto in = alloc_real(real_size());
    auto out = alloc_complex(spec_size());
    std::fill(in.get(), in.get() + real_size(), 0.0);
    for (int y = 0; y < k.height(); ++y)
      for (int x = 0; x < k.width(); ++x) {
        const int sx = flip ? k.width() - 1 - x : x;
        const int sy = flip ? k.height() - 1 - y : y;
        in[static_cast<std::size_t>(y) * fft_w + x] = k(sx, sy);
      }
    fftw_execute_dft_r2c(forward.get(), in.get(), out.get());
    std::vector<Complex> s(spec_size());
    std::memcpy(s.data(), out.get(), spec_size() * sizeof(fftw_complex));
    return s;
  }

  Image apply(const Image& img, const std::vector<Complex>& spectrum) const {
    if (img.width() != width || img.height() != height)
      throw std::invalid_argument("Convolver: image shape mismatch");
    auto in = alloc_real(real_size());
    auto out = alloc_complex(spec_size());
    std::fill(in.get(), in.get() + real_size(), 0.0);
    const int pw = width + 2 * pad_x;
    const int ph = height + 2 * pad_y;
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect_index(y - pad_y, height);
      for (int x = 0; x < pw; ++x)
        in[static_cast<std::size_t>(y) * fft_w + x] = img(reflect_index(x - pad_x, width), sy);
    }
    fftw_execute_dft_r2c(forward.get(), in.get(), out.get());
    auto* o = reinterpret_cast<Complex*>(out.get());
    for (std::size_t i = 0; i < spec_size(); ++i) o[i] *= spectrum[i];
    fftw_execute_dft_c2r(inverse.get(), out.get(), in.get());
    const double norm = 1.0 / static_cast<double>(real_size());
    Image result(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        result(x, y) = in[static_cast<std::size_t>(y + 2 * pad_y) * fft_w + x + 2 * pad_x] * norm;
    return result;
  }
};

Convolver::Convolver(const Image& kernel, int width, int height) : impl_(std::make_unique<Impl>()) {
  if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0)
    throw std::invalid_argument("Convolver: kernel dimensions must be odd");
  if (width <= 0 || height <= 0) throw std::invalid_argument("Convolver: empty image");
  auto& d = *impl_;
  d.width = width;
  d.height = height;
  d.pad_x = kernel.width() / 2;
  d.pad_y = kernel.height() / 2;
  d.fft_w = fast_size(width + 2 * d.pad_x + kernel.width() - 1);
  d.fft_h = fast_size(height + 2 * d.pad_y + kernel.height() - 1);
  {
    auto in = alloc_real(d.real_size());
    auto out = alloc_complex(d.spec_size());
    std::lock_guard lock(planner_mutex());
    d.forward.reset(fftw_plan_dft_r2c_2d(d.fft_h, d.fft_w, in.get(), out.get(), FFTW_ESTIMATE));
    d.inverse.reset(fftw_plan_dft_c2r_2d(d.fft_h, d.fft_w, out.get(), in.get(), FFTW_ESTIMATE));
  }
  d.kernel_spectrum = d.spectrum_of(kernel, false);
  d.flipped_spectrum = d.spectrum_of(kernel, true);
}

Convolver::~Convolver() = default;
Convolver::Convolver(Convolver&&) noexcept = default;
Convolver& Convolver::operator=(Convolver&&) noexcept = default;

Image Convolver::convolve(const Image& img) const { return impl_->apply(img, impl_->kernel_spectrum); }
Image Convolver::correlate(const Image& img) const {
  return impl_->apply(img, impl_->flipped_spectrum);
}
int Convolver::width() const { return impl_->width; }
int Convolver::height() const { return impl_->height; }

Image convolve_reflect(const Image& img, const Image& kernel) {
  return Convolver(kernel, img.width(), img.height()).convolve(img);
}

}  // namespace chromacode::fft
