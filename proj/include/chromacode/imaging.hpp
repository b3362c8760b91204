#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "chromacode/image.hpp"
#include "chromacode/optics.hpp"
#include "chromacode/temporal.hpp"

namespace chromacode::imaging {

struct OpticalSystem {
  optics::SpectralBands bands;
  optics::GridSpec grid;

  void validate() const {
    bands.validate();
    grid.validate();
  }
};

/// Memoized RGB PSFs keyed by (aperture, psi rounded to 1e-3, bands, grid).
/// The PSF is always evaluated at the rounded psi so results never depend on
/// which caller populated an entry. Concurrent lookups share a reader lock;
/// insertion takes the writer lock.
class PsfCache {
 public:
  static constexpr double kPsiQuantum = 1e-3;

  std::shared_ptr<const RgbImage> get(const optics::PhaseMask& mask, double psi, const OpticalSystem& optics);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const RgbImage>> entries_;
};

/// RGB PSF seen during one exposure step (sensor shift not applied).
std::shared_ptr<const RgbImage> step_psf(const temporal::CameraCoding& coding, const temporal::ExposureStep& step,
                                         const OpticalSystem& optics, PsfCache& cache);

/// Odd-sized kernel holding `psf` translated by a sub-pixel (dx, dy) with
/// bilinear splatting.
Image shifted_kernel(const Image& psf, double dx, double dy);

struct ScenePoint {
  double x0 = 0, y0 = 0;  ///< px at t = 0
  double vx = 0, vy = 0;  ///< px per exposure
  std::array<double, 3> rgb{1.0, 1.0, 1.0};
};

struct PointScene {
  std::vector<ScenePoint> points;
  int width = 0;
  int height = 0;

  void validate() const;
};

struct CodedImage {
  RgbImage pixels;
  temporal::CodingKind kind = temporal::CodingKind::Static;
  int n_steps = 0;
  double noise_sigma = 0;
  bool clipped = false;  ///< some PSF support fell outside the canvas
};

/// Sum over open steps of each point's bilinear splat (at its position plus
/// the sensor shift) stamped with that step's PSF, scaled by the point
/// intensity and step weight. Linear light, no clipping.
CodedImage render_points(const PointScene& scene, const temporal::CameraCoding& coding,
                         const temporal::ExposureSchedule& schedule, const OpticalSystem& optics,
                         PsfCache* cache = nullptr);

/// Centroid weighted by squared intensity. Emphasizes where a channel's PSF
/// is concentrated, which is what makes the colour order of a trace visible;
/// the plain centroid is identical for all channels because every step PSF
/// carries unit energy.
std::array<double, 2> trace_centroid(const Image& img);

struct FrameSequence {
  std::vector<RgbImage> frames;

  void validate() const;
  std::size_t size() const { return frames.size(); }
};

struct ExposureResult {
  CodedImage coded;
  RgbImage sharp_mid;
};

/// Simulates one coded capture of a frame burst: decode to linear light
/// (x^gamma), convolve frame k with the k-th step kernel, average over open
/// steps, re-encode (x^(1/gamma)), add AWGN of std sigma/255, clip to [0, 1].
ExposureResult code_exposure(const FrameSequence& frames, const temporal::CameraCoding& coding,
                             const OpticalSystem& optics, double gamma, double noise_sigma, std::uint64_t seed,
                             PsfCache* cache = nullptr);

/// Adds i.i.d. N(0, (sigma/255)^2) noise and clips to [0, 1]. sigma = 0
/// returns the input untouched.
RgbImage add_awgn(const RgbImage& img, double sigma_255, std::uint64_t seed);
Image add_awgn(const Image& img, double sigma_255, std::uint64_t seed);

/// Bilinear rotations about the image centre at angles total * k / n,
/// k = 0..n-1 (counter-clockwise on screen). Samples mapped from outside the
/// frame are black.
FrameSequence rotating_target(const RgbImage& image, double total_angle_deg, int n_steps);

/// Siemens-star style spoke target in [0, 1], `spokes` dark/bright pairs.
RgbImage spoke_target(int size, int spokes);

}  // namespace chromacode::imaging
