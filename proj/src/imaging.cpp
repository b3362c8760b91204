#include "chromacode/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"

namespace chromacode::imaging {

using temporal::CameraCoding;
using temporal::CodingKind;
using temporal::ExposureSchedule;
using temporal::ExposureStep;

std::shared_ptr<const RgbImage> PsfCache::get(const optics::PhaseMask& mask, double psi,
                                              const OpticalSystem& optics) {
  const double quantized = std::round(psi / kPsiQuantum) * kPsiQuantum;
  std::ostringstream key;
  key.precision(17);
  key << mask.fingerprint() << "|psi=" << std::llround(psi / kPsiQuantum) << "|bands=" << optics.bands.wavelength_nm[0]
      << "," << optics.bands.wavelength_nm[1] << "," << optics.bands.wavelength_nm[2]
      << "|grid=" << optics.grid.pupil_samples << "," << optics.grid.pad_factor << "," << optics.grid.psf_crop << ","
      << optics.grid.sampling_wavelength_nm;
  const std::string k = key.str();
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(k);
    if (it != entries_.end()) return it->second;
  }
  auto psf = std::make_shared<const RgbImage>(optics::psf_rgb(mask, quantized, optics.bands, optics.grid));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(k, std::move(psf));
  return it->second;
}

std::size_t PsfCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::shared_ptr<const RgbImage> step_psf(const CameraCoding& coding, const ExposureStep& step,
                                         const OpticalSystem& optics, PsfCache& cache) {
  if (coding.kind == CodingKind::PhaseSweep) return cache.get(coding.mask, step.psi, optics);
  return cache.get(coding.aperture(), 0.0, optics);
}

Image shifted_kernel(const Image& psf, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return psf;
  const int cw = psf.width() / 2;
  const int ch = psf.height() / 2;
  const int extra = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
  const int hw = cw + extra;
  const int hh = ch + extra;
  Image k(2 * hw + 1, 2 * hh + 1);
  const int ix = static_cast<int>(std::floor(dx));
  const int iy = static_cast<int>(std::floor(dy));
  const double fx = dx - ix;
  const double fy = dy - iy;
  const double w[2][2] = {{(1 - fx) * (1 - fy), fx * (1 - fy)}, {(1 - fx) * fy, fx * fy}};
  for (int y = 0; y < psf.height(); ++y)
    for (int x = 0; x < psf.width(); ++x) {
      const double v = psf(x, y);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          if (w[a][b] == 0.0) continue;
          k(x - cw + hw + ix + b, y - ch + hh + iy + a) += v * w[a][b];
        }
    }
  return k;
}

void PointScene::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError("scene canvas must be non-empty");
  auto inside = [&](double x, double y) { return x >= 0 && y >= 0 && x <= width - 1 && y <= height - 1; };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!inside(p.x0, p.y0) || !inside(p.x0 + p.vx, p.y0 + p.vy))
      throw ValidationError("point " + std::to_string(i) + " is outside the canvas at t=0 or t=1");
    for (double v : p.rgb)
      if (!(v >= 0)) throw ValidationError("point intensities must be non-negative");
  }
}

namespace {

// Adds `scale * psf` centred at pixel (px, py); returns false if any support
// sample fell outside the canvas.
bool stamp(Image& canvas, const Image& psf, int px, int py, double scale) {
  const int cw = psf.width() / 2;
  const int ch = psf.height() / 2;
  const int x_lo = std::max(0, px - cw), x_hi = std::min(canvas.width() - 1, px + cw);
  const int y_lo = std::max(0, py - ch), y_hi = std::min(canvas.height() - 1, py + ch);
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) canvas(x, y) += scale * psf(x - px + cw, y - py + ch);
  return px - cw >= 0 && py - ch >= 0 && px + cw < canvas.width() && py + ch < canvas.height();
}

}  // namespace

CodedImage render_points(const PointScene& scene, const CameraCoding& coding, const ExposureSchedule& schedule,
                         const OpticalSystem& optics, PsfCache* cache) {
  if (schedule.steps.empty()) throw ValidationError("empty exposure schedule");
  scene.validate();
  optics.validate();
  PsfCache local;
  PsfCache& psfs = cache ? *cache : local;

  CodedImage out;
  out.pixels = RgbImage(scene.width, scene.height);
  out.kind = coding.kind;
  out.n_steps = static_cast<int>(schedule.size());
  for (const auto& step : schedule.steps) {
    if (!step.shutter_open) continue;
    const auto psf = step_psf(coding, step, optics, psfs);
    for (const auto& p : scene.points) {
      const double x = p.x0 + p.vx * step.t_norm + step.shift_x;
      const double y = p.y0 + p.vy * step.t_norm + step.shift_y;
      const int ix = static_cast<int>(std::floor(x));
      const int iy = static_cast<int>(std::floor(y));
      const double fx = x - ix, fy = y - iy;
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      for (int corner = 0; corner < 4; ++corner) {
        if (w[corner] == 0.0) continue;
        const int cx = ix + (corner & 1);
        const int cy = iy + (corner >> 1);
        for (int c = 0; c < 3; ++c) {
          const double scale = w[corner] * step.weight * p.rgb[c];
          if (!stamp(out.pixels[c], (*psf)[c], cx, cy, scale)) out.clipped = true;
        }
      }
    }
  }
  return out;
}

std::array<double, 2> trace_centroid(const Image& img) {
  double mass = 0, mx = 0, my = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double w = img(x, y) * img(x, y);
      mass += w;
      mx += w * x;
      my += w * y;
    }
  if (!(mass > 0)) throw DomainError("trace_centroid of an empty image");
  return {mx / mass, my / mass};
}

void FrameSequence::validate() const {
  if (frames.empty()) throw ValidationError("frame sequence is empty");
  for (const auto& f : frames)
    if (!f.same_shape(frames.front())) throw ValidationError("frames differ in size");
}

namespace {

Image apply_gamma(const Image& img, double exponent) {
  Image out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::pow(std::max(src[i], 0.0), exponent);
  return out;
}

}  // namespace

ExposureResult code_exposure(const FrameSequence& frames, const CameraCoding& coding, const OpticalSystem& optics,
                             double gamma, double noise_sigma, std::uint64_t seed, PsfCache* cache) {
  frames.validate();
  const int n = static_cast<int>(frames.size());
  if (n % 2 == 0) throw ValidationError("frame count must be odd to define a middle frame");
  if (noise_sigma < 0) throw DomainError("noise sigma must be >= 0");
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  optics.validate();
  PsfCache local;
  PsfCache& psfs = cache ? *cache : local;

  const auto schedule = temporal::make_schedule(coding, n);
  const int w = frames.frames[0].width();
  const int h = frames.frames[0].height();
  RgbImage linear_sum(w, h);
  for (int k = 0; k < n; ++k) {
    const auto& step = schedule.steps[k];
    if (!step.shutter_open) continue;
    const auto psf = step_psf(coding, step, optics, psfs);
    for (int c = 0; c < 3; ++c) {
      const Image kernel = shifted_kernel((*psf)[c], step.shift_x, step.shift_y);
      Image blurred = fft::convolve_reflect(apply_gamma(frames.frames[k][c], gamma), kernel);
      blurred *= step.weight;
      linear_sum[c] += blurred;
    }
  }

  ExposureResult result;
  RgbImage encoded;
  for (int c = 0; c < 3; ++c) encoded[c] = apply_gamma(linear_sum[c], 1.0 / gamma);
  result.coded.pixels = add_awgn(encoded, noise_sigma, seed);
  clamp_inplace(result.coded.pixels, 0.0, 1.0);
  result.coded.kind = coding.kind;
  result.coded.n_steps = n;
  result.coded.noise_sigma = noise_sigma;
  result.sharp_mid = frames.frames[static_cast<std::size_t>((n - 1) / 2)];
  return result;
}

RgbImage add_awgn(const RgbImage& img, double sigma_255, std::uint64_t seed) {
  if (sigma_255 < 0) throw DomainError("noise sigma must be >= 0");
  if (sigma_255 == 0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_255 / 255.0);
  RgbImage out = img;
  for (auto& plane : out.planes)
    for (double& v : plane.pixels()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

Image add_awgn(const Image& img, double sigma_255, std::uint64_t seed) {
  if (sigma_255 < 0) throw DomainError("noise sigma must be >= 0");
  if (sigma_255 == 0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_255 / 255.0);
  Image out = img;
  for (double& v : out.pixels()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

namespace {

double sample_bilinear(const Image& img, double x, double y) {
  constexpr double kSnap = 1e-9;
  const int w = img.width(), h = img.height();
  if (x < -kSnap || y < -kSnap || x > w - 1 + kSnap || y > h - 1 + kSnap) return 0.0;
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), w - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img(x0, y0) + fx * img(x1, y0)) + fy * ((1 - fx) * img(x0, y1) + fx * img(x1, y1));
}

}  // namespace

FrameSequence rotating_target(const RgbImage& image, double total_angle_deg, int n_steps) {
  if (n_steps < 1) throw DomainError("n_steps must be >= 1");
  FrameSequence seq;
  const double cx = 0.5 * (image.width() - 1);
  const double cy = 0.5 * (image.height() - 1);
  for (int k = 0; k < n_steps; ++k) {
    const double theta = total_angle_deg * std::numbers::pi / 180.0 * k / n_steps;
    const double cs = std::cos(theta), sn = std::sin(theta);
    RgbImage frame(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x) {
        // Inverse map; y points down, so this turns content counter-clockwise.
        const double dx = x - cx, dy = y - cy;
        const double sx = cs * dx - sn * dy + cx;
        const double sy = sn * dx + cs * dy + cy;
        for (int c = 0; c < 3; ++c) frame[c](x, y) = sample_bilinear(image[c], sx, sy);
      }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

RgbImage spoke_target(int size, int spokes) {
  if (size <= 0 || spokes <= 0) throw DomainError("spoke target needs positive size and spoke count");
  RgbImage img(size, size, 0.5);
  const double c = 0.5 * (size - 1);
  const double radius = 0.5 * size - 1.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x - c, dy = y - c;
      if (std::hypot(dx, dy) > radius) continue;
      const double v = 0.5 + 0.5 * std::sin(spokes * std::atan2(dy, dx));
      for (int ch = 0; ch < 3; ++ch) img[ch](x, y) = v;
    }
  return img;
}

}  // namespace chromacode::imaging
