#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "chromacode/image.hpp"

namespace chromacode::fft {

using Complex = std::complex<double>;

enum class Direction { Forward, Inverse };

/// In-place unnormalized 2-D DFT of a row-major rows x cols buffer.
/// Forward uses the exp(-2*pi*i*k*n/N) kernel.
void dft2d(std::span<Complex> data, int rows, int cols, Direction dir);

/// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
int fast_size(int n);

/// Half-sample symmetric reflection of an index into [0, n).
int reflect_index(int i, int n);

/// Swap quadrants so the zero-frequency sample moves to (cols/2, rows/2).
template <class T>
void fftshift(std::span<T> data, int rows, int cols) {
  std::vector<T> tmp(data.begin(), data.end());
  for (int y = 0; y < rows; ++y) {
    const int sy = (y + rows / 2) % rows;
    for (int x = 0; x < cols; ++x) {
      const int sx = (x + cols / 2) % cols;
      data[static_cast<std::size_t>(sy) * cols + sx] = tmp[static_cast<std::size_t>(y) * cols + x];
    }
  }
}

/// Same-size linear convolution with an odd-sized, centered kernel. The
/// input is extended by half-sample reflection before transforming, so the
/// output carries no dark border. The kernel spectrum is computed once and
/// reused, which matters for iterative deconvolution.
class Convolver {
 public:
  Convolver(const Image& kernel, int width, int height);
  ~Convolver();
  Convolver(Convolver&&) noexcept;
  Convolver& operator=(Convolver&&) noexcept;
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  Image convolve(const Image& img) const;
  /// Correlation with the kernel, i.e. convolution with its point reflection.
  Image correlate(const Image& img) const;

  int width() const;
  int height() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around Convolver.
Image convolve_reflect(const Image& img, const Image& kernel);

}  // namespace chromacode::fft
