#include <cmath>
#include <numbers>

#include "chromacode/errors.hpp"
#include "chromacode/spectral.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chromacode;
using namespace chromacode::spectral;
using temporal::CameraCoding;
using temporal::make_schedule;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double wrap(double a) { return std::remainder(a, kTwoPi); }

imaging::OpticalSystem default_optics() { return {}; }

imaging::PsfCache& shared_cache() {
  static imaging::PsfCache cache;
  return cache;
}

XtSlice slice_for(const CameraCoding& coding, double v, int steps, int width) {
  return xt_psf(coding, v, make_schedule(coding, steps), default_optics(), width, &shared_cache());
}

double row_width(const Image& img, int row) {
  double m = 0, mx = 0;
  for (int x = 0; x < img.width(); ++x) {
    m += img(x, row);
    mx += img(x, row) * x;
  }
  mx /= m;
  double v = 0;
  for (int x = 0; x < img.width(); ++x) v += img(x, row) * (x - mx) * (x - mx);
  return std::sqrt(v / m);
}

double row_centroid(const Image& img, int row) {
  double m = 0, mx = 0;
  for (int x = 0; x < img.width(); ++x) {
    m += img(x, row);
    mx += img(x, row) * x;
  }
  return mx / m;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("static camera, no motion: identical rows") {
    const auto s = slice_for(CameraCoding::static_camera(), 0, 16, 96);
    CHECK(s.steps() == 16);
    CHECK(s.width() == 96);
    for (int c = 0; c < 3; ++c) {
      CHECK(s.channels[c].sum() > 0);
      CHECK(s.channels[c].min() >= 0);
      for (int t = 1; t < 16; ++t)
        for (int x = 0; x < 96; ++x) CHECK(s.channels[c](x, t) == s.channels[c](x, 0));
    }
  }

  TEST_CASE("static camera, motion v: a line of slope v with a constant profile") {
    const double v = 12;
    const int n = 13;
    const auto s = slice_for(CameraCoding::static_camera(), v, n, 128);
    for (int c = 0; c < 3; ++c) {
      const double c0 = row_centroid(s.channels[c], 0);
      double mass0 = 0;
      for (int x = 0; x < 128; ++x) mass0 += s.channels[c](x, 0);
      for (int t = 0; t < n; ++t) {
        CHECK(row_centroid(s.channels[c], t) == doctest::Approx(c0 + v * t / (n - 1)).epsilon(1e-9));
        double mass = 0;
        for (int x = 0; x < 128; ++x) mass += s.channels[c](x, t);
        CHECK(mass == doctest::Approx(mass0).epsilon(1e-12));
      }
      // one pixel per step: consecutive rows are exact translates
      for (int x = 0; x + 1 < 128; ++x) CHECK(s.channels[c](x + 1, 1) == doctest::Approx(s.channels[c](x, 0)));
    }
  }

  TEST_CASE("phase sweep rows: narrowest channel moves blue, green, red") {
    const int n = 33;
    const auto s = slice_for(CameraCoding::phase_sweep(), 20, n, 160);
    std::vector<int> order;
    for (int t = 0; t < n; ++t) {
      std::array<double, 3> w{};
      for (int c = 0; c < 3; ++c) w[c] = row_width(s.channels[c], t);
      const int narrow = static_cast<int>(std::min_element(w.begin(), w.end()) - w.begin());
      order.push_back(2 - narrow);  // B = 0, G = 1, R = 2
    }
    CHECK(order.front() == 0);
    CHECK(order.back() == 2);
    for (int t = 1; t < n; ++t) CHECK(order[t] >= order[t - 1]);
    CHECK(std::count(order.begin(), order.end(), 1) > 0);
  }

  TEST_CASE("closed shutter rows are empty") {
    const auto coding = CameraCoding::fluttered();
    const auto s = slice_for(coding, 10, 52, 128);
    for (int t = 0; t < 52; ++t) {
      double mass = 0;
      for (int x = 0; x < 128; ++x) mass += s.channels[0](x, t);
      if (coding.flutter_code[t]) CHECK(mass > 0);
      else CHECK(mass == 0.0);
    }
  }

  TEST_CASE("slice errors") {
    CHECK_THROWS_AS(slice_for(CameraCoding::static_camera(), 0, 8, 40), DomainError);
    CHECK_THROWS_AS(slice_for(CameraCoding::static_camera(), 80, 8, 128), DomainError);
    CHECK_THROWS_AS(xt_psf(CameraCoding::static_camera(), 0, temporal::ExposureSchedule{}, default_optics(), 96),
                    ValidationError);
  }

  TEST_CASE("delta slice has a flat spectrum with zero phase") {
    XtSlice s;
    for (auto& c : s.channels) {
      c = Image(16, 8);
      c(0, 0) = 1.0;
    }
    const auto spec = xt_spectrum(s);
    for (int c = 0; c < 3; ++c) {
      for (double a : spec.amplitude[c].pixels()) CHECK(a == doctest::Approx(1.0).epsilon(1e-14));
      for (double p : spec.phase[c].pixels()) CHECK(std::abs(p) < 1e-14);
    }
    CHECK(spec.dc_x() == 8);
    CHECK(spec.dc_y() == 4);
  }

  TEST_CASE("Parseval and point symmetry of the amplitude") {
    const auto s = slice_for(CameraCoding::phase_sweep(), 10, 40, 128);
    const auto spec = xt_spectrum(s);
    const int w = spec.width(), h = spec.height();
    for (int c = 0; c < 3; ++c) {
      double ex = 0, ef = 0;
      for (double v : s.channels[c].pixels()) ex += v * v;
      for (double a : spec.amplitude[c].pixels()) ef += a * a;
      CHECK(std::abs(ex - ef / (w * h)) / ex <= 1e-6);
      double asym = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          asym = std::max(asym, std::abs(spec.amplitude[c](x, y) - spec.amplitude[c]((w - x) % w, (h - y) % h)));
      CHECK(asym <= 1e-8);
    }
  }

  TEST_CASE("translating the slice only tilts the phase") {
    const auto s = slice_for(CameraCoding::phase_sweep(), 6, 24, 96);
    const int dx = 3;
    XtSlice moved;
    for (int c = 0; c < 3; ++c) {
      moved.channels[c] = Image(96, 24);
      for (int t = 0; t < 24; ++t)
        for (int x = 0; x < 96; ++x) moved.channels[c]((x + dx) % 96, t) = s.channels[c](x, t);
    }
    const auto a = xt_spectrum(s);
    const auto b = xt_spectrum(moved);
    for (int c = 0; c < 3; ++c) {
      CHECK(oracle::max_abs_diff(a.amplitude[c], b.amplitude[c]) <= 1e-8);
      const double peak = a.amplitude[c].max();
      double worst = 0;
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
          if (a.amplitude[c](x, y) < 1e-6 * peak) continue;
          const double fx = x - a.dc_x();
          const double expected = -kTwoPi * fx * dx / a.width();
          worst = std::max(worst, std::abs(wrap(b.phase[c](x, y) - a.phase[c](x, y) - expected)));
        }
      CHECK(worst <= 1e-6);
    }
  }

  TEST_CASE("unwrapping leaves smooth phase untouched") {
    Image smooth(20, 10);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 20; ++x) smooth(x, y) = 0.1 * x - 0.2 * y + 0.05 * std::sin(x * y);
    const auto u = phase_unwrap_2d(smooth);
    CHECK(oracle::max_abs_diff(u, smooth) == 0.0);
  }

  TEST_CASE("unwrapping a wrapped ramp") {
    Image wrapped(100, 1);
    for (int x = 0; x < 100; ++x) wrapped(x, 0) = wrap(0.5 * x);
    const auto u = phase_unwrap_2d(wrapped);
    const double k = std::round((u(0, 0) - 0.0) / kTwoPi);
    double err = 0;
    for (int x = 0; x < 100; ++x) err = std::max(err, std::abs(u(x, 0) - k * kTwoPi - 0.5 * x));
    CHECK(err < 1e-9);
  }

  TEST_CASE("unwrapping a wrapped plane") {
    const double a = 0.9, b = -1.3;
    Image wrapped(40, 30);
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x) wrapped(x, y) = wrap(a * x + b * y + 0.4);
    const auto u = phase_unwrap_2d(wrapped);
    const double k = std::round((u(0, 0) - 0.4) / kTwoPi);
    double err = 0;
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x) err = std::max(err, std::abs(u(x, y) - k * kTwoPi - (a * x + b * y + 0.4)));
    CHECK(err < 1e-9);
  }

  TEST_CASE("unwrapping only adds multiples of two pi") {
    const Image noise = oracle::random_image(25, 17, 77, -std::numbers::pi, std::numbers::pi);
    const Image q = oracle::random_image(25, 17, 78);
    for (const auto& u : {phase_unwrap_2d(noise), phase_unwrap_2d(noise, q)})
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double turns = (u.pixels()[i] - noise.pixels()[i]) / kTwoPi;
        CHECK(std::abs(turns - std::round(turns)) < 1e-9);
      }
    CHECK_THROWS_AS(phase_unwrap_2d(noise, Image(3, 3)), ValidationError);
  }

  TEST_CASE("static phase is gray, the phase sweep colors it") {
    for (double v : {0.0, 10.0}) {
      const auto still = xt_spectrum(slice_for(CameraCoding::static_camera(), v, 64, 192));
      const auto sweep = xt_spectrum(slice_for(CameraCoding::phase_sweep(), v, 64, 192));
      const double dev_static = max_interchannel_phase_deviation(still);
      const double dev_sweep = max_interchannel_phase_deviation(sweep);
      CHECK(dev_static <= 1e-6);
      CHECK(dev_sweep >= 10 * dev_static);
      CHECK(dev_sweep > 1.0);
      if (v == 10.0) CHECK(phase_colorfulness(sweep) > 10 * phase_colorfulness(still));
    }
  }

  TEST_CASE("other clear-aperture codings keep a gray phase") {
    for (auto coding : {CameraCoding::fluttered(), CameraCoding::parabolic(10)}) {
      const auto spec = xt_spectrum(slice_for(coding, 10, 52, 192));
      CHECK(max_interchannel_phase_deviation(spec) <= 1e-6);
    }
  }

  TEST_CASE("reliable support is connected to DC") {
    const auto spec = xt_spectrum(slice_for(CameraCoding::static_camera(), 10, 32, 128));
    const auto support = reliable_support(spec);
    CHECK(support[spec.dc_y() * spec.width() + spec.dc_x()] == 1);
    const auto strict = reliable_support(spec, 0.5);
    CHECK(std::count(strict.begin(), strict.end(), 1) < std::count(support.begin(), support.end(), 1));
  }

  TEST_CASE("fluttered shutter keeps the frequencies a box blur destroys") {
    const int n = 52, width = 208;
    const double v = n - 1;  // one pixel per step
    const auto box = xt_spectrum(slice_for(CameraCoding::static_camera(), v, n, width));
    const auto flutter = xt_spectrum(slice_for(CameraCoding::fluttered(), v, n, width));
    const auto still = xt_spectrum(slice_for(CameraCoding::static_camera(), 0, n, width));
    const int row = box.dc_y();
    for (int c = 0; c < 3; ++c) {
      const double otf_dc = still.amplitude[c](still.dc_x(), row);
      const double box_dc = box.amplitude[c](box.dc_x(), row);
      const double fl_dc = flutter.amplitude[c](flutter.dc_x(), row);
      int box_zeros = 0;
      double worst = 1.0;
      for (int x = 0; x < width; ++x) {
        if (still.amplitude[c](x, row) < 1e-2 * otf_dc) continue;
        if (box.amplitude[c](x, row) < 1e-10 * box_dc) ++box_zeros;
        worst = std::min(worst, flutter.amplitude[c](x, row) / fl_dc);
      }
      CHECK(box_zeros >= 4);
      CHECK(worst >= 1e-3);
    }
  }
}
