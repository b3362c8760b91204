#pragma once

#include <array>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chromacode/image.hpp"

namespace chromacode::optics {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thin-lens imaging geometry. Lengths in millimetres; the object distance
/// may be kInfinity for infinite-conjugate imaging.
struct LensSpec {
  double exit_pupil_radius_mm = 0;
  double focal_length_mm = 0;
  double object_distance_mm = kInfinity;
  double image_distance_mm = 0;

  void validate() const;
};

/// Dimensionless defocus measure
///   psi = pi R^2 / lambda * (1/z_o + 1/z_img - 1/f).
double defocus_psi(const LensSpec& lens, double wavelength_nm);

/// psi scales as 1/lambda at fixed geometry.
double psi_at_wavelength(double psi_ref, double ref_wavelength_nm, double wavelength_nm);

struct PhaseRing {
  double r_inner = 0;  ///< normalized pupil radius
  double r_outer = 0;
  double phase_rad = 0;  ///< at the mask reference wavelength
};

/// Concentric phase rings in the aperture. No rings means a clear aperture.
struct PhaseMask {
  std::vector<PhaseRing> rings;
  double reference_wavelength_nm = 455.0;

  static PhaseMask clear(double reference_wavelength_nm = 455.0);
  /// Two-ring chromatic-defocus mask: [0.55, 0.8] at 6.5 rad and
  /// [0.8, 1.0] at 13.2 rad, both specified at 455 nm.
  static PhaseMask two_ring();

  void validate() const;
  bool is_clear() const { return rings.empty(); }

  /// Mask phase at normalized radius rho for the given wavelength; the
  /// optical path is fixed so the phase scales as reference/wavelength.
  double phase_at(double rho, double wavelength_nm) const;

  /// Stable textual form, used for cache keys and provenance hashes.
  std::string fingerprint() const;
};

/// Representative wavelength per sensor channel, R, G, B order.
struct SpectralBands {
  std::array<double, 3> wavelength_nm{610.0, 530.0, 455.0};

  double operator[](Channel c) const { return wavelength_nm[static_cast<int>(c)]; }
  void validate() const;
};

/// Sampling of the pupil and image planes.
///
/// The pupil array is pupil_samples^2. At sampling_wavelength_nm the unit
/// pupil disc spans the full array; at a longer wavelength lambda it spans
/// a fraction sampling/lambda of it, so image-plane pixels keep a fixed
/// physical pitch across channels and diffraction scales with lambda.
struct GridSpec {
  int pupil_samples = 256;
  int pad_factor = 2;
  int psf_crop = 65;
  double sampling_wavelength_nm = 455.0;

  int padded_size() const { return pupil_samples * pad_factor; }
  void validate() const;
};

struct ComplexField {
  int width = 0;
  int height = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  const std::complex<double>& at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// Normalized pupil radius of array sample (x, y) at the given wavelength.
double pupil_radius(const GridSpec& grid, int x, int y, double wavelength_nm);

/// Complex pupil exp(i (phi_mask(rho) + psi_lambda rho^2)) inside the unit
/// disc, zero outside. `psi` is given at the mask reference wavelength.
ComplexField build_pupil(const PhaseMask& mask, double psi, double wavelength_nm, const GridSpec& grid);

/// Incoherent PSF |FT(pupil)|^2 with DC at the centre of a psf_crop^2 window,
/// normalized to unit sum over the window.
Image psf_monochrome(const ComplexField& pupil, const GridSpec& grid);

struct MonochromePsf {
  Image psf;
  double crop_fraction = 0;  ///< share of total PSF energy inside the crop
};
MonochromePsf psf_monochrome_with_energy(const ComplexField& pupil, const GridSpec& grid);

/// One PSF per channel, each normalized on its own.
RgbImage psf_rgb(const PhaseMask& mask, double psi_ref, const SpectralBands& bands, const GridSpec& grid);

/// Second-moment radius sqrt(sum p r^2 / sum p) about the centroid.
double channel_width(const Image& psf);

/// Per-channel, per-time-step PSFs with energy bookkeeping.
struct PsfStack {
  std::array<std::vector<Image>, 3> psfs;      ///< [channel][time]
  std::array<std::vector<double>, 3> energy;   ///< crop fraction per [channel][time]

  int time_steps() const { return static_cast<int>(psfs[0].size()); }
};

PsfStack psf_stack(const PhaseMask& mask, std::span<const double> psi_per_step, const SpectralBands& bands,
                   const GridSpec& grid);

}  // namespace chromacode::optics
