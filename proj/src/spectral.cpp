#include "chromacode/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"

namespace chromacode::spectral {

using temporal::CameraCoding;
using temporal::ExposureSchedule;

XtSlice xt_psf(const CameraCoding& coding, double velocity_px, const ExposureSchedule& schedule,
               const imaging::OpticalSystem& optics, int width, imaging::PsfCache* cache) {
  if (schedule.steps.empty()) throw ValidationError("empty exposure schedule");
  if (width <= 0) throw DomainError("slice width must be positive");
  optics.validate();
  imaging::PsfCache local;
  imaging::PsfCache& psfs = cache ? *cache : local;

  const int steps = static_cast<int>(schedule.size());
  XtSlice slice;
  for (auto& ch : slice.channels) ch = Image(width, steps);
  const double x0 = 0.5 * (width - 1) - 0.5 * velocity_px;
  for (int t = 0; t < steps; ++t) {
    const auto& step = schedule.steps[t];
    if (!step.shutter_open) continue;
    const auto psf = imaging::step_psf(coding, step, optics, psfs);
    const int crop = (*psf)[0].width();
    const int half = crop / 2;
    const double x = x0 + velocity_px * step.t_norm + step.shift_x;
    const int ix = static_cast<int>(std::floor(x));
    const double fx = x - ix;
    if (ix - half < 0 || ix + half + 1 >= width)
      throw DomainError("trajectory leaves the x range of the slice");
    for (int c = 0; c < 3; ++c) {
      const Image& p = (*psf)[c];
      Image& row = slice.channels[c];
      for (int i = 0; i < crop; ++i) {
        const double v = p(i, half) * step.weight;
        row(ix + i - half, t) += (1 - fx) * v;
        if (fx != 0.0) row(ix + i - half + 1, t) += fx * v;
      }
    }
  }
  return slice;
}

XtSpectrum xt_spectrum(const XtSlice& slice) {
  const int w = slice.width();
  const int h = slice.steps();
  XtSpectrum out;
  std::array<Image, 3> wrapped;
  for (int c = 0; c < 3; ++c) {
    std::vector<fft::Complex> buf(static_cast<std::size_t>(w) * h);
    auto src = slice.channels[c].pixels();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = src[i];
    fft::dft2d(buf, h, w, fft::Direction::Forward);
    fft::fftshift<fft::Complex>(buf, h, w);
    out.amplitude[c] = Image(w, h);
    wrapped[c] = Image(w, h);
    auto amp = out.amplitude[c].pixels();
    auto ph = wrapped[c].pixels();
    for (std::size_t i = 0; i < buf.size(); ++i) {
      amp[i] = std::abs(buf[i]);
      ph[i] = std::arg(buf[i]);
    }
  }
  Image quality(w, h, 1.0);
  for (int c = 0; c < 3; ++c) {
    const double peak = out.amplitude[c].max();
    auto q = quality.pixels();
    auto amp = out.amplitude[c].pixels();
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::min(q[i], peak > 0 ? amp[i] / peak : 0.0);
  }
  for (int c = 0; c < 3; ++c) out.phase[c] = phase_unwrap_2d(wrapped[c], quality);
  return out;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double a) { return a - kTwoPi * std::round(a / kTwoPi); }

}  // namespace

Image phase_unwrap_2d(const Image& wrapped, const Image& quality) {
  if (!wrapped.same_shape(quality)) throw ValidationError("quality map shape mismatch");
  const int w = wrapped.width();
  const int h = wrapped.height();
  Image out = wrapped;
  if (wrapped.empty()) return out;

  const auto q = quality.pixels();
  const std::size_t seed = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
  std::vector<std::uint8_t> done(wrapped.size(), 0);

  // (quality, -index) orders ties by raster position, keeping runs reproducible.
  using Entry = std::tuple<double, std::int64_t, std::size_t>;  // quality, -index, parent
  std::priority_queue<Entry> frontier;
  auto push_neighbours = [&](std::size_t i) {
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
      if (!done[j]) frontier.emplace(q[j], -static_cast<std::int64_t>(j), i);
    }
  };

  auto px = out.pixels();
  const auto wp = wrapped.pixels();
  done[seed] = 1;
  push_neighbours(seed);
  while (!frontier.empty()) {
    const auto [quality_value, neg_index, parent] = frontier.top();
    frontier.pop();
    const auto i = static_cast<std::size_t>(-neg_index);
    if (done[i]) continue;
    px[i] = wp[i] + kTwoPi * std::round((px[parent] - wp[i]) / kTwoPi);
    done[i] = 1;
    push_neighbours(i);
  }
  return out;
}

Image phase_unwrap_2d(const Image& wrapped) {
  const int w = wrapped.width();
  const int h = wrapped.height();
  Image quality(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double d = 0;
      if (x > 0 && x + 1 < w)
        d += std::abs(wrap(wrapped(x - 1, y) - wrapped(x, y)) - wrap(wrapped(x, y) - wrapped(x + 1, y)));
      if (y > 0 && y + 1 < h)
        d += std::abs(wrap(wrapped(x, y - 1) - wrapped(x, y)) - wrap(wrapped(x, y) - wrapped(x, y + 1)));
      quality(x, y) = -d;
    }
  return phase_unwrap_2d(wrapped, quality);
}

std::vector<std::uint8_t> reliable_support(const XtSpectrum& spectrum, double rel_threshold) {
  const int w = spectrum.width();
  const int h = spectrum.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> ok(n, 1);
  for (int c = 0; c < 3; ++c) {
    const double peak = spectrum.amplitude[c].max();
    auto amp = spectrum.amplitude[c].pixels();
    for (std::size_t i = 0; i < n; ++i)
      if (!(amp[i] >= rel_threshold * peak) || peak <= 0) ok[i] = 0;
  }
  std::vector<std::uint8_t> support(n, 0);
  const std::size_t dc = static_cast<std::size_t>(spectrum.dc_y()) * w + spectrum.dc_x();
  if (!ok[dc]) return support;
  std::vector<std::size_t> stack{dc};
  support[dc] = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
      if (ok[j] && !support[j]) {
        support[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return support;
}

namespace {

template <class F>
void for_each_aligned(const XtSpectrum& spectrum, double rel_threshold, F&& visit) {
  const auto support = reliable_support(spectrum, rel_threshold);
  std::array<double, 3> dc{};
  for (int c = 0; c < 3; ++c) dc[c] = spectrum.phase[c](spectrum.dc_x(), spectrum.dc_y());
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!support[i]) continue;
    std::array<double, 3> p{};
    for (int c = 0; c < 3; ++c) p[c] = spectrum.phase[c].pixels()[i] - dc[c];
    visit(p);
  }
}

}  // namespace

double max_interchannel_phase_deviation(const XtSpectrum& spectrum, double rel_threshold) {
  double worst = 0;
  for_each_aligned(spectrum, rel_threshold, [&](const std::array<double, 3>& p) {
    const auto [lo, hi] = std::minmax({p[0], p[1], p[2]});
    worst = std::max(worst, hi - lo);
  });
  return worst;
}

double phase_colorfulness(const XtSpectrum& spectrum, double rel_threshold) {
  double total = 0;
  std::size_t count = 0;
  for_each_aligned(spectrum, rel_threshold, [&](const std::array<double, 3>& p) {
    const double mean = (p[0] + p[1] + p[2]) / 3.0;
    double var = 0;
    for (double v : p) var += (v - mean) * (v - mean);
    total += var / 3.0;
    ++count;
  });
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace chromacode::spectral
