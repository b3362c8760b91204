#include <cmath>
#include <thread>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"
#include "chromacode/imaging.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chromacode;
using namespace chromacode::imaging;
using temporal::CameraCoding;
using temporal::make_schedule;

namespace {

OpticalSystem small_optics() { return {optics::SpectralBands{}, optics::GridSpec{64, 2, 33, 455}}; }

OpticalSystem delta_optics() { return {optics::SpectralBands{}, optics::GridSpec{16, 1, 1, 455}}; }

RgbImage place(const RgbImage& psf, int w, int h, int cx, int cy) {
  RgbImage out(w, h);
  const int half = psf.width() / 2;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < psf.height(); ++y)
      for (int x = 0; x < psf.width(); ++x) out[c](cx + x - half, cy + y - half) = psf[c](x, y);
  return out;
}

double plain_centroid_x(const Image& img) {
  double m = 0, mx = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      m += img(x, y);
      mx += img(x, y) * x;
    }
  return mx / m;
}

double separation(double speed) {
  const OpticalSystem sys{optics::SpectralBands{}, optics::GridSpec{}};
  PointScene scene{{{70.0 - speed / 2, 48, speed, 0, {1, 1, 1}}}, 140, 96};
  static PsfCache cache;
  const auto coding = CameraCoding::phase_sweep();
  const auto img = render_points(scene, coding, make_schedule(coding, 64), sys, &cache).pixels;
  return trace_centroid(img[Channel::R])[0] - trace_centroid(img[Channel::B])[0];
}

}  // namespace

TEST_SUITE("imaging") {
  TEST_CASE("static point under the static camera is the in-focus PSF") {
    const auto sys = small_optics();
    PointScene scene{{{50, 40, 0, 0, {1, 1, 1}}}, 100, 80};
    const auto coding = CameraCoding::static_camera();
    const auto out = render_points(scene, coding, make_schedule(coding, 5), sys);
    const auto psf = optics::psf_rgb(optics::PhaseMask::clear(), 0, sys.bands, sys.grid);
    CHECK(oracle::max_abs_diff(out.pixels, place(psf, 100, 80, 50, 40)) < 1e-12);
    CHECK_FALSE(out.clipped);
    CHECK(out.n_steps == 5);
  }

  TEST_CASE("static point under the phase sweep: centroids coincide, widths differ") {
    const OpticalSystem sys{optics::SpectralBands{}, optics::GridSpec{128, 2, 65, 455}};
    PointScene scene{{{60, 60, 0, 0, {1, 1, 1}}}, 120, 120};
    const auto coding = CameraCoding::phase_sweep();
    const auto out = render_points(scene, coding, make_schedule(coding, 17), sys).pixels;
    for (int c = 0; c < 3; ++c) {
      CHECK(plain_centroid_x(out[c]) == doctest::Approx(60.0).epsilon(1e-9));
      CHECK(trace_centroid(out[c])[0] == doctest::Approx(60.0).epsilon(1e-9));
      CHECK(trace_centroid(out[c])[1] == doctest::Approx(60.0).epsilon(1e-9));
    }
    const double wr = optics::channel_width(out[Channel::R]);
    const double wg = optics::channel_width(out[Channel::G]);
    const double wb = optics::channel_width(out[Channel::B]);
    CHECK(std::abs(wr - wg) > 0.05);
    CHECK(std::abs(wg - wb) > 0.05);
  }

  TEST_CASE("moving point leaves a blue-green-red trace") {
    const OpticalSystem sys{optics::SpectralBands{}, optics::GridSpec{}};
    const auto coding = CameraCoding::phase_sweep();
    const auto schedule = make_schedule(coding, 64);
    PsfCache cache;
    for (double v : {10.0, -10.0}) {
      PointScene scene{{{70.0 - v / 2, 48, v, 0, {1, 1, 1}}}, 140, 96};
      const auto img = render_points(scene, coding, schedule, sys, &cache).pixels;
      const double r = trace_centroid(img[Channel::R])[0];
      const double g = trace_centroid(img[Channel::G])[0];
      const double b = trace_centroid(img[Channel::B])[0];
      if (v > 0) {
        CHECK(b < g);
        CHECK(g < r);
      } else {
        CHECK(b > g);
        CHECK(g > r);
      }
    }
  }

  TEST_CASE("trace length grows with speed") {
    double last = -1e-9;
    for (double v : {0.0, 5.0, 10.0, 20.0}) {
      const double d = separation(v);
      CHECK(d >= last);
      last = d;
    }
    CHECK(std::abs(separation(0.0)) < 1e-9);
  }

  TEST_CASE("rendering is linear in the scene") {
    const auto sys = small_optics();
    const auto coding = CameraCoding::phase_sweep();
    const auto schedule = make_schedule(coding, 9);
    PsfCache cache;
    const ScenePoint a{40.3, 30.7, 12.5, 3.25, {1.0, 0.5, 0.25}};
    const ScenePoint b{70.0, 50.0, -7.0, 0.0, {0.2, 0.9, 0.4}};
    auto both = render_points(PointScene{{a, b}, 120, 90}, coding, schedule, sys, &cache).pixels;
    auto sum = render_points(PointScene{{a}, 120, 90}, coding, schedule, sys, &cache).pixels;
    sum += render_points(PointScene{{b}, 120, 90}, coding, schedule, sys, &cache).pixels;
    CHECK(oracle::max_abs_diff(both, sum) <= 1e-10);
  }

  TEST_CASE("static camera conserves energy for interior points") {
    const auto sys = small_optics();
    PointScene scene{{{50.4, 40.6, 3.3, 1.2, {2.0, 1.0, 0.5}}}, 100, 80};
    const auto coding = CameraCoding::static_camera();
    const auto out = render_points(scene, coding, make_schedule(coding, 7), sys).pixels;
    CHECK(std::abs(out[0].sum() - 2.0) / 2.0 < 1e-3);
    CHECK(std::abs(out[1].sum() - 1.0) < 1e-3);
    CHECK(std::abs(out[2].sum() - 0.5) / 0.5 < 1e-3);
  }

  TEST_CASE("points whose PSF leaves the canvas are flagged") {
    const auto sys = small_optics();
    const auto coding = CameraCoding::static_camera();
    const auto out = render_points(PointScene{{{2, 2, 0, 0, {1, 1, 1}}}, 50, 50}, coding, make_schedule(coding, 1), sys);
    CHECK(out.clipped);
    CHECK_THROWS_AS(PointScene({{{60, 2, 0, 0, {1, 1, 1}}}, 50, 50}).validate(), ValidationError);
    CHECK_THROWS_AS(PointScene({{{40, 2, 20, 0, {1, 1, 1}}}, 50, 50}).validate(), ValidationError);
  }

  TEST_CASE("fluttered trace follows the code") {
    const OpticalSystem sys{optics::SpectralBands{}, optics::GridSpec{}};
    const auto coding = CameraCoding::fluttered();
    const int per_chop = 4;
    const int n = 52 * per_chop;
    const double x0 = 50;
    PointScene scene{{{x0, 40, static_cast<double>(n - 1), 0, {1, 1, 1}}}, 320, 80};
    const auto img = render_points(scene, coding, make_schedule(coding, n), sys).pixels;
    const Image y = luma(img);
    std::vector<double> profile, code;
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int r = 0; r < y.height(); ++r) s += y(static_cast<int>(x0) + j, r);
      profile.push_back(s);
      code.push_back(coding.flutter_code[j / per_chop]);
    }
    auto centred = [](std::vector<double> v) {
      double m = 0;
      for (double x : v) m += x;
      m /= v.size();
      for (double& x : v) x -= m;
      return v;
    };
    const auto p = centred(profile), q = centred(code);
    double pq = 0, pp = 0, qq = 0;
    for (int j = 0; j < n; ++j) {
      pq += p[j] * q[j];
      pp += p[j] * p[j];
      qq += q[j] * q[j];
    }
    CHECK(pq / std::sqrt(pp * qq) >= 0.9);
  }

  TEST_CASE("shifted kernels") {
    const Image psf = oracle::gaussian(7, 1.0);
    CHECK(oracle::max_abs_diff(shifted_kernel(psf, 0, 0), psf) == 0.0);
    const Image k = shifted_kernel(psf, 2.0, -1.0);
    CHECK(k.width() % 2 == 1);
    CHECK(k.sum() == doctest::Approx(1.0));
    const int c = k.width() / 2;
    CHECK(k(c + 2, c - 1) == doctest::Approx(psf(3, 3)));
    const Image f = shifted_kernel(psf, 0.25, 0.5);
    CHECK(f.sum() == doctest::Approx(1.0));
    double mx = 0, my = 0;
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) {
        mx += f(x, y) * (x - f.width() / 2);
        my += f(x, y) * (y - f.height() / 2);
      }
    CHECK(mx == doctest::Approx(0.25));
    CHECK(my == doctest::Approx(0.5));
  }

  TEST_CASE("single frame static exposure is a linear-light convolution") {
    const auto sys = small_optics();
    const RgbImage frame = oracle::random_rgb(48, 40, 4);
    FrameSequence seq{{frame}};
    const auto res = code_exposure(seq, CameraCoding::static_camera(), sys, 2.2, 0.0, 1);
    const auto psf = optics::psf_rgb(optics::PhaseMask::clear(), 0, sys.bands, sys.grid);
    for (int c = 0; c < 3; ++c) {
      Image lin = frame[c];
      for (double& v : lin.pixels()) v = std::pow(v, 2.2);
      Image expected = oracle::convolve_reflect(lin, psf[c]);
      for (double& v : expected.pixels()) v = std::pow(std::max(v, 0.0), 1 / 2.2);
      CHECK(oracle::max_abs_diff(res.coded.pixels[c], expected) < 1e-9);
    }
    const auto identity = code_exposure(seq, CameraCoding::static_camera(), delta_optics(), 2.2, 0.0, 1);
    CHECK(oracle::max_abs_diff(identity.coded.pixels, frame) < 1e-12);
    CHECK(oracle::max_abs_diff(identity.sharp_mid, frame) == 0.0);
  }

  TEST_CASE("nine delta-PSF frames average in linear light") {
    std::vector<RgbImage> frames;
    for (int k = 0; k < 9; ++k) frames.push_back(oracle::random_rgb(20, 16, 100 + k));
    const auto res = code_exposure(FrameSequence{frames}, CameraCoding::static_camera(), delta_optics(), 2.2, 0.0, 7);
    double err = 0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 20; ++x) {
          double acc = 0;
          for (int k = 0; k < 9; ++k) acc += std::pow(frames[k][c](x, y), 2.2);
          err = std::max(err, std::abs(res.coded.pixels[c](x, y) - std::pow(acc / 9, 1 / 2.2)));
        }
    CHECK(err <= 1e-6);
    CHECK(oracle::max_abs_diff(res.sharp_mid, frames[4]) == 0.0);
    CHECK(res.coded.n_steps == 9);
  }

  TEST_CASE("frame exposure of a moving dot matches the point renderer") {
    const auto sys = small_optics();
    const auto coding = CameraCoding::phase_sweep();
    std::vector<RgbImage> frames;
    for (int k = 0; k < 9; ++k) {
      RgbImage f(160, 120);
      for (int c = 0; c < 3; ++c) f[c](60 + k, 60) = 1.0;
      frames.push_back(f);
    }
    const auto res = code_exposure(FrameSequence{frames}, coding, sys, 2.2, 0.0, 3);
    PointScene scene{{{60, 60, 8, 0, {1, 1, 1}}}, 160, 120};
    auto rendered = render_points(scene, coding, make_schedule(coding, 9), sys).pixels;
    for (auto& plane : rendered.planes)
      for (double& v : plane.pixels()) v = std::pow(std::max(v, 0.0), 1 / 2.2);
    CHECK(oracle::max_abs_diff(res.coded.pixels, rendered) <= 1e-4);
  }

  TEST_CASE("exposure errors") {
    const auto sys = delta_optics();
    FrameSequence two{{RgbImage(4, 4), RgbImage(4, 4)}};
    CHECK_THROWS_AS(code_exposure(two, CameraCoding::static_camera(), sys, 2.2, 0, 1), ValidationError);
    FrameSequence one{{RgbImage(4, 4)}};
    CHECK_THROWS_AS(code_exposure(one, CameraCoding::static_camera(), sys, 2.2, -1, 1), DomainError);
    CHECK_THROWS_AS(code_exposure(FrameSequence{}, CameraCoding::static_camera(), sys, 2.2, 0, 1), ValidationError);
    FrameSequence mixed{{RgbImage(4, 4), RgbImage(5, 4), RgbImage(4, 4)}};
    CHECK_THROWS_AS(code_exposure(mixed, CameraCoding::static_camera(), sys, 2.2, 0, 1), ValidationError);
  }

  TEST_CASE("AWGN") {
    const RgbImage gray(100, 100, 0.5);
    CHECK(oracle::max_abs_diff(add_awgn(gray, 0.0, 1), gray) == 0.0);
    const Image mid(1000, 1000, 0.5);
    const Image noisy = add_awgn(mid, 3.0, 42);
    double s = 0, s2 = 0;
    for (double v : noisy.pixels()) {
      s += v - 0.5;
      s2 += (v - 0.5) * (v - 0.5);
    }
    const double n = static_cast<double>(noisy.size());
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(std::abs(sd - 3.0 / 255) / (3.0 / 255) < 0.01);
    CHECK(oracle::max_abs_diff(add_awgn(gray, 3.0, 5), add_awgn(gray, 3.0, 5)) == 0.0);
    CHECK(oracle::max_abs_diff(add_awgn(gray, 3.0, 5), add_awgn(gray, 3.0, 6)) > 0.0);
    const auto clipped = add_awgn(RgbImage(50, 50, 1.0), 9.0, 2);
    CHECK(std::max({clipped[0].max(), clipped[1].max(), clipped[2].max()}) <= 1.0);
    CHECK_THROWS_AS(add_awgn(gray, -1.0, 1), DomainError);
  }

  TEST_CASE("rotating target") {
    const RgbImage star = spoke_target(64, 8);
    const auto still = rotating_target(star, 0, 5);
    REQUIRE(still.size() == 5);
    for (const auto& f : still.frames) CHECK(oracle::max_abs_diff(f, star) < 1e-12);
    const auto quarter = rotating_target(star, 360, 4);
    for (const auto& f : quarter.frames) CHECK(oracle::max_abs_diff(f, star) < 1e-9);
    CHECK_THROWS_AS(rotating_target(star, 90, 0), DomainError);
  }

  TEST_CASE("quarter turn maps a horizontal bar to a vertical one") {
    RgbImage bar(65, 65);
    for (int y = 30; y <= 34; ++y)
      for (int x = 8; x <= 56; ++x)
        for (int c = 0; c < 3; ++c) bar[c](x, y) = 1.0;
    const auto seq = rotating_target(bar, 180, 2);  // second frame at 90 degrees
    const auto& turned = seq.frames[1];
    int inter = 0, uni = 0;
    for (int y = 0; y < 65; ++y)
      for (int x = 0; x < 65; ++x) {
        const bool want = x >= 30 && x <= 34 && y >= 8 && y <= 56;
        const bool got = turned[0](x, y) > 0.5;
        inter += want && got;
        uni += want || got;
      }
    CHECK(static_cast<double>(inter) / uni >= 0.95);
  }

  TEST_CASE("PSF cache is shared safely between threads") {
    PsfCache cache;
    const auto sys = small_optics();
    const auto mask = optics::PhaseMask::two_ring();
    std::vector<std::shared_ptr<const RgbImage>> got(4);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
      pool.emplace_back([&, t] { got[t] = cache.get(mask, 2.0 + 1e-5 * t, sys); });
    for (auto& t : pool) t.join();
    CHECK(cache.size() == 1);
    for (int t = 1; t < 4; ++t) CHECK(oracle::max_abs_diff(*got[t], *got[0]) == 0.0);
    cache.get(mask, 2.5, sys);
    CHECK(cache.size() == 2);
  }
}
