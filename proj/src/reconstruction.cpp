#include "chromacode/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <utility>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"
#include "chromacode/temporal.hpp"

namespace chromacode::recon {

void DeconvParams::validate() const {
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  if (!(regularization_lambda >= 0)) throw ValidationError("regularization_lambda must be non-negative");
}

namespace {

void check_psf(const Image& psf) {
  if (psf.empty() || psf.width() % 2 == 0 || psf.height() % 2 == 0)
    throw ValidationError("psf must have odd dimensions");
  if (psf.min() < 0) throw ValidationError("psf has negative samples");
  if (std::abs(psf.sum() - 1.0) > 1e-6) throw ValidationError("psf is not normalized (sum " + std::to_string(psf.sum()) + ")");
}

}  // namespace

Image lucy_richardson(const Image& blurred, const Image& psf, const DeconvParams& params) {
  params.validate();
  check_psf(psf);
  if (blurred.empty()) throw DomainError("empty image");
  if (blurred.min() < 0) throw DomainError("blurred image has negative samples");
  const fft::Convolver h(psf, blurred.width(), blurred.height());
  Image x = blurred;
  Image ratio(blurred.width(), blurred.height());
  for (int it = 0; it < params.iterations; ++it) {
    const Image hx = h.convolve(x);
    auto r = ratio.pixels();
    auto y = blurred.pixels();
    auto d = hx.pixels();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] / (d[i] + params.epsilon);
    const Image update = h.correlate(ratio);
    auto xp = x.pixels();
    auto u = update.pixels();
    for (std::size_t i = 0; i < xp.size(); ++i) xp[i] = std::max(0.0, xp[i] * u[i]);
  }
  return x;
}

RgbImage lucy_richardson(const RgbImage& blurred, const Image& psf, const DeconvParams& params) {
  RgbImage out;
  for (int c = 0; c < 3; ++c) out[c] = lucy_richardson(blurred[c], psf, params);
  return out;
}

RgbImage lucy_richardson(const RgbImage& blurred, const RgbImage& psf, const DeconvParams& params) {
  RgbImage out;
  for (int c = 0; c < 3; ++c) out[c] = lucy_richardson(blurred[c], psf[c], params);
  return out;
}

double poisson_fit(const Image& blurred, const Image& psf, const Image& estimate, double epsilon) {
  const Image hx = fft::convolve_reflect(estimate, psf);
  double total = 0;
  auto y = blurred.pixels();
  auto d = hx.pixels();
  for (std::size_t i = 0; i < y.size(); ++i) total += y[i] * std::log(d[i] + epsilon) - d[i];
  return total;
}

std::vector<double> flutter_kernel(const std::vector<std::uint8_t>& code, int motion_len) {
  if (code.empty()) throw ValidationError("empty flutter code");
  if (motion_len < 1) throw ValidationError("motion length must be >= 1");
  const int n = static_cast<int>(code.size());
  std::vector<double> k(motion_len, 0.0);
  // Pixel j spans chop coordinates [j*n/L, (j+1)*n/L).
  for (int j = 0; j < motion_len; ++j) {
    const double a = static_cast<double>(j) * n / motion_len;
    const double b = static_cast<double>(j + 1) * n / motion_len;
    for (int c = static_cast<int>(std::floor(a)); c < n && c < b; ++c) {
      const double overlap = std::min<double>(b, c + 1) - std::max<double>(a, c);
      if (overlap > 0 && code[c]) k[j] += overlap;
    }
  }
  double total = 0;
  for (double v : k) total += v;
  if (total <= 0) throw ValidationError("flutter code never opens the shutter");
  for (double& v : k) v /= total;
  return k;
}

Eigen::MatrixXd smear_matrix(std::span<const double> kernel, int width) {
  if (kernel.empty() || width < 1) throw ValidationError("smear matrix needs a kernel and width >= 1");
  const int len = static_cast<int>(kernel.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(width + len - 1, width);
  for (int col = 0; col < width; ++col)
    for (int k = 0; k < len; ++k) a(col + k, col) = kernel[k];
  return a;
}

Eigen::MatrixXd smear_matrix_same(std::span<const double> kernel, int width) {
  if (kernel.empty()) throw ValidationError("empty smear kernel");
  if (width < 1) throw ValidationError("scanline width must be positive");
  const int front = (static_cast<int>(kernel.size()) - 1) / 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(width, width);
  for (int i = 0; i < width; ++i)
    for (int j = 0; j < static_cast<int>(kernel.size()); ++j) a(i, std::clamp(i + front - j, 0, width - 1)) += kernel[j];
  return a;
}

std::vector<double> smear_scanline(std::span<const double> signal, std::span<const double> kernel) {
  if (signal.empty() || kernel.empty()) return {};
  std::vector<double> out(signal.size() + kernel.size() - 1, 0.0);
  for (std::size_t i = 0; i < signal.size(); ++i)
    for (std::size_t k = 0; k < kernel.size(); ++k) out[i + k] += signal[i] * kernel[k];
  return out;
}

double min_singular_value(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().minCoeff();
}

FlutterSolver::FlutterSolver(std::span<const double> kernel, int width, double lambda)
    : FlutterSolver(smear_matrix(kernel, width), lambda) {}

FlutterSolver::FlutterSolver(Eigen::MatrixXd a, double lambda) : a_(std::move(a)), lambda_(lambda) {
  if (!(lambda >= 0)) throw ValidationError("regularization_lambda must be non-negative");
  if (a_.size() == 0) throw ValidationError("empty smear matrix");
  const Eigen::Index width = a_.cols();
  const Eigen::MatrixXd ata = a_.transpose() * a_;
  const double scale = ata.diagonal().maxCoeff();
  auto factor = [&](double lam) {
    ldlt_.compute(ata + lam * Eigen::MatrixXd::Identity(width, width));
    const auto d = ldlt_.vectorD().cwiseAbs();
    return ldlt_.info() == Eigen::Success && d.minCoeff() > 1e-13 * scale;
  };
  if (!factor(lambda_)) {
    warning_ = true;
    lambda_ = std::max({lambda_, 1e-10 * scale, 1e-12});
    factor(lambda_);
  }
}

Eigen::VectorXd FlutterSolver::solve(const Eigen::VectorXd& b) const {
  if (b.size() != a_.rows()) throw ValidationError("scanline length does not match the smear matrix");
  return ldlt_.solve(a_.transpose() * b);
}

namespace {

Image invert_plane(const Image& plane, const FlutterSolver& solver, Axis axis) {
  const bool along_x = axis == Axis::X;
  const int lines = along_x ? plane.height() : plane.width();
  const int width = along_x ? plane.width() : plane.height();
  Image out(plane.width(), plane.height());
  Eigen::VectorXd b(width);
  for (int line = 0; line < lines; ++line) {
    for (int i = 0; i < width; ++i) b[i] = along_x ? plane(i, line) : plane(line, i);
    const Eigen::VectorXd x = solver.solve(b);
    for (int i = 0; i < width; ++i) (along_x ? out(i, line) : out(line, i)) = x[i];
  }
  return out;
}

}  // namespace

Image flutter_invert(const Image& blurred, const std::vector<std::uint8_t>& code, int motion_len_px, Axis axis,
                     const DeconvParams& params, bool* conditioning_warning) {
  params.validate();
  if (blurred.empty()) throw DomainError("empty image");
  const auto kernel = flutter_kernel(code, motion_len_px);
  const int width = axis == Axis::X ? blurred.width() : blurred.height();
  const FlutterSolver solver(smear_matrix_same(kernel, width), params.regularization_lambda);
  if (solver.conditioning_warning())
    std::cerr << "warning: flutter smear matrix is rank deficient, using lambda=" << solver.effective_lambda() << "\n";
  if (conditioning_warning) *conditioning_warning = solver.conditioning_warning();
  return invert_plane(blurred, solver, axis);
}

FlutterInversion flutter_invert(const RgbImage& blurred, const std::vector<std::uint8_t>& code, int motion_len_px,
                                Axis axis, const DeconvParams& params) {
  params.validate();
  if (blurred.planes[0].empty()) throw DomainError("empty image");
  const auto kernel = flutter_kernel(code, motion_len_px);
  const int width = axis == Axis::X ? blurred.width() : blurred.height();
  const FlutterSolver solver(smear_matrix_same(kernel, width), params.regularization_lambda);
  if (solver.conditioning_warning())
    std::cerr << "warning: flutter smear matrix is rank deficient, using lambda=" << solver.effective_lambda() << "\n";
  FlutterInversion result;
  result.conditioning_warning = solver.conditioning_warning();
  for (int c = 0; c < 3; ++c) result.image[c] = invert_plane(blurred[c], solver, axis);
  return result;
}

Image parabolic_kernel(double v_max_px, int n_steps) {
  if (!(v_max_px >= 0)) throw ValidationError("v_max must be non-negative");
  const auto schedule = temporal::make_schedule(temporal::CameraCoding::parabolic(v_max_px), n_steps);
  double reach = 0;
  for (const auto& s : schedule.steps) reach = std::max(reach, std::abs(s.shift_x));
  const int half = static_cast<int>(std::ceil(reach)) + 1;
  Image k(2 * half + 1, 1);
  for (const auto& s : schedule.steps) {
    const double x = half + s.shift_x;
    const int ix = static_cast<int>(std::floor(x));
    const double fx = x - ix;
    k(ix, 0) += (1 - fx) * s.weight;
    if (fx > 0) k(ix + 1, 0) += fx * s.weight;
  }
  k *= 1.0 / k.sum();
  return k;
}

}  // namespace chromacode::recon
