#include <cmath>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"
#include "chromacode/metrics.hpp"
#include "chromacode/reconstruction.hpp"
#include "chromacode/temporal.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chromacode;
using namespace chromacode::recon;

namespace {

Image box_kernel(int len) {
  Image k(len, 1, 1.0 / len);
  return k;
}

// Piecewise-constant blocks on a smooth texture, values in [0.1, 0.9].
Image blocks(int w, int h) {
  Image img = oracle::texture(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (((x / 12) + (y / 16)) % 2 == 0) img(x, y) = 0.5 * img(x, y) + 0.45;
      else img(x, y) = 0.5 * img(x, y) - 0.05;
  return img;
}

// Bright object surrounded by a dark border of at least `margin` pixels.
Image interior_object(int size, int margin) {
  Image img(size, size);
  for (int y = margin; y < size - margin; ++y)
    for (int x = margin; x < size - margin; ++x) img(x, y) = 0.3 + 0.5 * ((x / 5 + y / 7) % 2);
  return img;
}

const std::vector<std::uint8_t>& code52() {
  static const auto code = temporal::parse_flutter_code(temporal::default_flutter_code());
  return code;
}

}  // namespace

TEST_SUITE("reconstruction") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(DeconvParams{}.validate());
    CHECK_THROWS_AS((DeconvParams{0, 1e-12, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((DeconvParams{5, 0, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((DeconvParams{5, 1e-12, -1}.validate()), ValidationError);
    CHECK(DeconvParams{}.iterations == 50);
    CHECK(DeconvParams{}.epsilon == 1e-12);
  }

  TEST_CASE("Lucy-Richardson with a delta PSF is the identity") {
    const Image img = oracle::random_image(30, 20, 1, 0.2, 0.8);
    Image delta(1, 1, 1.0);
    for (int it : {1, 3, 10}) CHECK(oracle::max_abs_diff(lucy_richardson(img, delta, {it, 1e-12, 0}), img) < 1e-10);
  }

  TEST_CASE("flat images are a fixed point") {
    const Image flat(40, 30, 0.37);
    const Image out = lucy_richardson(flat, oracle::gaussian(7, 1.5), {25, 1e-12, 0});
    CHECK(oracle::max_abs_diff(out, flat) < 1e-9);
  }

  TEST_CASE("horizontal box blur: 50 iterations gain at least 3 dB") {
    const Image truth = blocks(96, 96);
    const Image blurred = oracle::convolve_reflect(truth, box_kernel(9));
    const Image restored = lucy_richardson(blurred, box_kernel(9), DeconvParams{});
    const double before = metrics::psnr(blurred, truth);
    const double after = metrics::psnr(restored, truth);
    MESSAGE("PSNR " << before << " -> " << after);
    CHECK(after - before >= 3.0);
  }

  TEST_CASE("iterates stay non-negative and conserve flux") {
    const Image truth = interior_object(64, 14);
    const Image psf = oracle::gaussian(9, 1.5);
    const Image blurred = oracle::convolve_reflect(truth, psf);
    const Image out = lucy_richardson(blurred, psf, {100, 1e-12, 0});
    CHECK(out.min() >= 0.0);
    CHECK(std::abs(out.sum() - blurred.sum()) / blurred.sum() <= 0.01);
  }

  TEST_CASE("Poisson fit never decreases on noiseless data") {
    const Image truth = interior_object(40, 8);
    const Image psf = oracle::gaussian(7, 1.2);
    const Image blurred = oracle::convolve_reflect(truth, psf);
    double last = poisson_fit(blurred, psf, blurred);
    for (int it = 1; it <= 8; ++it) {
      const double now = poisson_fit(blurred, psf, lucy_richardson(blurred, psf, {it, 1e-12, 0}));
      CHECK(now >= last - 1e-9 * std::abs(last));
      last = now;
    }
  }

  TEST_CASE("PSF checks") {
    const Image img(10, 10, 0.5);
    CHECK_THROWS_AS(lucy_richardson(img, Image(3, 3, 0.2), DeconvParams{}), ValidationError);
    Image negative(3, 1);
    negative(0, 0) = -0.5;
    negative(1, 0) = 1.0;
    negative(2, 0) = 0.5;
    CHECK_THROWS_AS(lucy_richardson(img, negative, DeconvParams{}), ValidationError);
    CHECK_THROWS_AS(lucy_richardson(img, Image(2, 2, 0.25), DeconvParams{}), ValidationError);
    RgbImage rgb(10, 10, 0.5);
    CHECK(oracle::max_abs_diff(lucy_richardson(rgb, Image(1, 1, 1.0), DeconvParams{}), rgb) < 1e-10);
  }

  TEST_CASE("flutter kernels") {
    const auto k = flutter_kernel(code52(), 52);
    REQUIRE(k.size() == 52);
    for (int i = 0; i < 52; ++i) CHECK(k[i] == doctest::Approx(code52()[i] / 26.0));
    const auto k2 = flutter_kernel(code52(), 104);
    for (int i = 0; i < 104; ++i) CHECK(k2[i] == doctest::Approx(code52()[i / 2] / 52.0));
    const auto k1 = flutter_kernel({1, 1, 1, 1}, 1);
    REQUIRE(k1.size() == 1);
    CHECK(k1[0] == 1.0);
    const auto k3 = flutter_kernel({1, 0, 1}, 2);  // chops straddle pixels
    CHECK(k3[0] == doctest::Approx(0.5));
    CHECK(k3[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(flutter_kernel({0, 0}, 4), ValidationError);
  }

  TEST_CASE("smear matrix equals full convolution") {
    const std::vector<double> k{0.2, 0.5, 0.3};
    const Image xi = oracle::random_image(10, 1, 3);
    const auto x = xi.pixels();
    const auto a = smear_matrix(k, 10);
    CHECK(a.rows() == 12);
    CHECK(a.cols() == 10);
    const Eigen::VectorXd ax = a * Eigen::Map<const Eigen::VectorXd>(x.data(), 10);
    const auto direct = smear_scanline(std::vector<double>(x.begin(), x.end()), k);
    for (int i = 0; i < 12; ++i) CHECK(ax[i] == doctest::Approx(direct[i]));
  }

  TEST_CASE("same-size smear matrix replicates the edges") {
    const std::vector<double> k{0.1, 0.2, 0.3, 0.4};
    const Image xi = oracle::random_image(9, 1, 4);
    const auto a = smear_matrix_same(k, 9);
    REQUIRE(a.rows() == 9);
    for (int i = 0; i < 9; ++i) {
      double direct = 0, row = 0;
      for (int j = 0; j < 4; ++j) direct += k[j] * xi(std::clamp(i + 1 - j, 0, 8), 0);
      for (int c = 0; c < 9; ++c) row += a(i, c) * xi(c, 0);
      CHECK(row == doctest::Approx(direct).epsilon(1e-14));
      CHECK(a.row(i).sum() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("the code is far better conditioned than a box") {
    const int w = 256;
    const auto code = flutter_kernel(code52(), 52);
    const std::vector<double> box(52, 1.0 / 52);
    const double ratio = min_singular_value(smear_matrix(code, w)) / min_singular_value(smear_matrix(box, w));
    MESSAGE("min singular value ratio " << ratio);
    CHECK(ratio >= 10.0);
  }

  TEST_CASE("forward-then-invert round trip") {
    const int w = 256;
    const auto k = flutter_kernel(code52(), 52);
    const Image x = oracle::random_image(w, 1, 21);
    const auto b = smear_scanline(std::vector<double>(x.pixels().begin(), x.pixels().end()), k);
    const FlutterSolver solver(k, w, 1e-8);
    CHECK_FALSE(solver.conditioning_warning());
    const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::VectorXd xr = solver.solve(bv);
    double err = 0;
    for (int i = 0; i < w; ++i) err = std::max(err, std::abs(xr[i] - x(i, 0)));
    CHECK(err <= 1e-6);
    CHECK((solver.matrix() * xr - bv).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK_THROWS_AS(solver.solve(Eigen::VectorXd::Zero(10)), ValidationError);
  }

  TEST_CASE("rank-deficient systems fall back to a ridge with a warning") {
    const FlutterSolver solver(std::vector<double>{0.0, 0.0}, 6, 0.0);
    CHECK(solver.conditioning_warning());
    CHECK(solver.effective_lambda() > 0);
    const Eigen::VectorXd x = solver.solve(Eigen::VectorXd::Ones(7));
    CHECK(x.allFinite());
  }

  TEST_CASE("all-ones code over one pixel is the identity") {
    const Image img = oracle::random_image(20, 12, 8);
    bool warned = true;
    const Image out = flutter_invert(img, {1, 1, 1, 1, 1}, 1, Axis::X, {1, 1e-12, 0.0}, &warned);
    CHECK_FALSE(warned);
    CHECK(oracle::max_abs_diff(out, img) < 1e-12);
  }

  TEST_CASE("image-level flutter inversion restores a coded smear") {
    const Image truth = blocks(128, 24);
    const auto k = flutter_kernel(code52(), 52);
    for (Axis axis : {Axis::X, Axis::Y}) {
      const bool along_x = axis == Axis::X;
      const Image src = along_x ? truth : [&] {
        Image t(24, 128);
        for (int y = 0; y < 128; ++y)
          for (int x = 0; x < 24; ++x) t(x, y) = truth(y, x);
        return t;
      }();
      // "same" smear with edge replication, matching the inversion model
      const int lines = along_x ? src.height() : src.width();
      const int w = along_x ? src.width() : src.height();
      Image blurred(src.width(), src.height());
      for (int line = 0; line < lines; ++line)
        for (int i = 0; i < w; ++i) {
          double s = 0;
          for (int j = 0; j < 52; ++j) {
            const int at = std::clamp(i + 25 - j, 0, w - 1);
            s += k[j] * (along_x ? src(at, line) : src(line, at));
          }
          (along_x ? blurred(i, line) : blurred(line, i)) = s;
        }
      const Image restored = flutter_invert(blurred, code52(), 52, axis, {1, 1e-12, 1e-10});
      const double before = metrics::psnr(blurred, src);
      const double after = metrics::psnr(restored, src);
      MESSAGE("flutter PSNR " << before << " -> " << after);
      CHECK(after > 60);
    }
  }

  TEST_CASE("parabolic kernel") {
    const Image k = parabolic_kernel(12, 201);
    CHECK(k.width() % 2 == 1);
    CHECK(k.height() == 1);
    CHECK(k.sum() == doctest::Approx(1.0));
    CHECK(k.min() >= 0);
    const int c = k.width() / 2;
    double mean = 0;
    for (int x = 0; x < k.width(); ++x) mean += k(x, 0) * (x - c);
    CHECK(mean == doctest::Approx(12.0 / 12).epsilon(0.02));  // E[v (t - 1/2)^2] = v / 12
    for (int x = 0; x < c; ++x) CHECK(k(x, 0) == 0.0);
    const Image still = parabolic_kernel(0, 9);
    CHECK(still.width() == 3);
    CHECK(still(1, 0) == 1.0);
  }
}
