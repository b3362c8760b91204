#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "chromacode/image.hpp"
#include "chromacode/imaging.hpp"
#include "chromacode/temporal.hpp"

namespace chromacode::spectral {

/// One spatial axis (columns, px) against exposure time (rows, steps).
struct XtSlice {
  std::array<Image, 3> channels;

  int width() const { return channels[0].width(); }
  int steps() const { return channels[0].height(); }
};

/// Centred 2-D spectrum of an XtSlice: DC sits at (width/2, steps/2).
struct XtSpectrum {
  std::array<Image, 3> amplitude;
  std::array<Image, 3> phase;  ///< unwrapped, radians

  int width() const { return amplitude[0].width(); }
  int height() const { return amplitude[0].height(); }
  int dc_x() const { return width() / 2; }
  int dc_y() const { return height() / 2; }
};

/// Row t holds the central-row cross-section of the step-t PSF, splatted at
/// x = x0 + velocity * t_norm + shift_x(t) and scaled by the step weight;
/// x0 centres the trajectory in a slice `width` pixels wide. Closed-shutter
/// rows stay zero. Throws DomainError if the PSF support leaves the slice.
XtSlice xt_psf(const temporal::CameraCoding& coding, double velocity_px, const temporal::ExposureSchedule& schedule,
               const imaging::OpticalSystem& optics, int width, imaging::PsfCache* cache = nullptr);

/// Per-channel 2-D DFT. Phases are unwrapped with a quality map shared by all
/// channels (the smallest normalized amplitude among them), so every channel
/// is unwrapped along the same path.
XtSpectrum xt_spectrum(const XtSlice& slice);

/// Quality-guided flood-fill unwrapping: grows from the highest-quality
/// sample, always extending through the best remaining frontier sample, and
/// adds the multiple of 2*pi that keeps it closest to its already unwrapped
/// neighbour. Output differs from input by integer multiples of 2*pi.
Image phase_unwrap_2d(const Image& wrapped, const Image& quality);

/// As above with a quality map from wrapped second differences.
Image phase_unwrap_2d(const Image& wrapped);

/// Frequencies where every channel's amplitude is at least `rel_threshold`
/// of its own peak, restricted to the 4-connected component containing DC.
std::vector<std::uint8_t> reliable_support(const XtSpectrum& spectrum, double rel_threshold = 1e-3);

/// Largest |phase_a - phase_b| between channels over the reliable support,
/// after subtracting each channel's DC phase.
double max_interchannel_phase_deviation(const XtSpectrum& spectrum, double rel_threshold = 1e-3);

/// Mean over the reliable support of the across-channel variance of the
/// DC-aligned unwrapped phase.
double phase_colorfulness(const XtSpectrum& spectrum, double rel_threshold = 1e-3);

}  // namespace chromacode::spectral
