#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chromacode/image.hpp"

namespace chromacode::recon {

struct DeconvParams {
  int iterations = 50;
  double epsilon = 1e-12;
  double regularization_lambda = 0.0;

  void validate() const;
};

/// Richardson-Lucy iterations x <- x * H^T(y / (Hx + eps)) from x = y,
/// clipped to >= 0. The PSF must be odd-sized, non-negative and sum to 1.
Image lucy_richardson(const Image& blurred, const Image& psf, const DeconvParams& params);
RgbImage lucy_richardson(const RgbImage& blurred, const Image& psf, const DeconvParams& params);
RgbImage lucy_richardson(const RgbImage& blurred, const RgbImage& psf, const DeconvParams& params);

/// Poisson log-likelihood (up to a constant) of `blurred` given `estimate`:
/// sum y log(Hx) - Hx.
double poisson_fit(const Image& blurred, const Image& psf, const Image& estimate, double epsilon = 1e-12);

/// Blur kernel of a code stretched over motion_len pixels: pixel j collects
/// the open fraction of chops covering [j, j+1) * n / motion_len. Sums to 1.
std::vector<double> flutter_kernel(const std::vector<std::uint8_t>& code, int motion_len);

/// Full linear smear: (width + L - 1) x width Toeplitz matrix of `kernel`.
Eigen::MatrixXd smear_matrix(std::span<const double> kernel, int width);

/// Same-size smear, width x width: output sample i sees the scene at
/// i + (L-1)/2 - j, with the scene extended past both ends by edge replication.
Eigen::MatrixXd smear_matrix_same(std::span<const double> kernel, int width);

/// Full convolution of a scanline with the kernel.
std::vector<double> smear_scanline(std::span<const double> signal, std::span<const double> kernel);

double min_singular_value(const Eigen::MatrixXd& a);

/// Ridge least squares min |Ax - b|^2 + lambda |x|^2 for the smear matrix of
/// one kernel; the normal equations are factored once and reused.
class FlutterSolver {
 public:
  FlutterSolver(std::span<const double> kernel, int width, double lambda);
  /// Any smear matrix, e.g. smear_matrix_same.
  FlutterSolver(Eigen::MatrixXd a, double lambda);

  /// b has a.rows() samples (width + L - 1 for the full smear).
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  /// Set when A is numerically rank deficient at the requested lambda; the
  /// solver then falls back to a small ridge.
  bool conditioning_warning() const { return warning_; }
  double effective_lambda() const { return lambda_; }
  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double lambda_ = 0;
  bool warning_ = false;
};

enum class Axis { X, Y };

struct FlutterInversion {
  RgbImage image;
  bool conditioning_warning = false;
};

/// Same-size inversion of a 1-D coded smear along `axis`: each scanline is
/// solved against smear_matrix_same.
FlutterInversion flutter_invert(const RgbImage& blurred, const std::vector<std::uint8_t>& code, int motion_len_px,
                                Axis axis, const DeconvParams& params);
Image flutter_invert(const Image& blurred, const std::vector<std::uint8_t>& code, int motion_len_px, Axis axis,
                     const DeconvParams& params, bool* conditioning_warning = nullptr);

/// Motion-invariant kernel of a parabolic sensor sweep for a static point:
/// the x histogram of shift_x(t) over n_steps, centred on zero shift.
Image parabolic_kernel(double v_max_px, int n_steps);

}  // namespace chromacode::recon
