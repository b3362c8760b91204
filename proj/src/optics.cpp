#include "chromacode/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chromacode/errors.hpp"
#include "chromacode/fft.hpp"

namespace chromacode::optics {

void LensSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0; };
  if (!positive(exit_pupil_radius_mm) || !positive(focal_length_mm) || !positive(image_distance_mm))
    throw DomainError("lens radius, focal length and image distance must be positive and finite");
  if (!(object_distance_mm > 0)) throw DomainError("object distance must be positive or infinity");
}

double defocus_psi(const LensSpec& lens, double wavelength_nm) {
  lens.validate();
  if (!(wavelength_nm > 0)) throw DomainError("wavelength must be positive");
  const double lambda_mm = wavelength_nm * 1e-6;
  const double inv_object = std::isinf(lens.object_distance_mm) ? 0.0 : 1.0 / lens.object_distance_mm;
  const double r = lens.exit_pupil_radius_mm;
  return std::numbers::pi * r * r / lambda_mm *
         (inv_object + 1.0 / lens.image_distance_mm - 1.0 / lens.focal_length_mm);
}

double psi_at_wavelength(double psi_ref, double ref_wavelength_nm, double wavelength_nm) {
  if (!(ref_wavelength_nm > 0) || !(wavelength_nm > 0)) throw DomainError("wavelengths must be positive");
  return psi_ref * ref_wavelength_nm / wavelength_nm;
}

PhaseMask PhaseMask::clear(double reference_wavelength_nm) {
  return PhaseMask{{}, reference_wavelength_nm};
}

PhaseMask PhaseMask::two_ring() {
  return PhaseMask{{{0.55, 0.8, 6.5}, {0.8, 1.0, 13.2}}, 455.0};
}

void PhaseMask::validate() const {
  if (!(reference_wavelength_nm > 0)) throw ValidationError("mask reference wavelength must be positive");
  double prev_outer = 0.0;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    const auto& r = rings[i];
    if (!(r.r_inner >= 0 && r.r_inner < r.r_outer && r.r_outer <= 1.0))
      throw ValidationError("ring " + std::to_string(i) + " needs 0 <= r_inner < r_outer <= 1");
    if (i > 0 && r.r_inner < prev_outer)
      throw ValidationError("rings must be ordered and non-overlapping (ring " + std::to_string(i) + ")");
    prev_outer = r.r_outer;
  }
}

double PhaseMask::phase_at(double rho, double wavelength_nm) const {
  for (const auto& r : rings) {
    const bool inside = rho >= r.r_inner && (rho < r.r_outer || (r.r_outer >= 1.0 && rho <= r.r_outer));
    if (inside) return r.phase_rad * reference_wavelength_nm / wavelength_nm;
  }
  return 0.0;
}

std::string PhaseMask::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "ref=" << reference_wavelength_nm;
  for (const auto& r : rings) os << ";[" << r.r_inner << "," << r.r_outer << "]@" << r.phase_rad;
  return os.str();
}

void SpectralBands::validate() const {
  for (double w : wavelength_nm)
    if (!(w > 0)) throw ValidationError("band wavelengths must be positive");
  if (!(wavelength_nm[0] > wavelength_nm[1] && wavelength_nm[1] > wavelength_nm[2]))
    throw ValidationError("band wavelengths must strictly decrease from R to B");
}

void GridSpec::validate() const {
  if (pupil_samples <= 0 || pupil_samples % 2 != 0)
    throw ValidationError("pupil_samples must be a positive even integer");
  if (pad_factor < 1) throw ValidationError("pad_factor must be >= 1");
  if (psf_crop <= 0 || psf_crop % 2 == 0) throw ValidationError("psf_crop must be a positive odd integer");
  if (psf_crop > padded_size()) throw ValidationError("psf_crop exceeds pupil_samples * pad_factor");
  if (!(sampling_wavelength_nm > 0)) throw ValidationError("sampling wavelength must be positive");
}

double pupil_radius(const GridSpec& grid, int x, int y, double wavelength_nm) {
  const double c = 0.5 * (grid.pupil_samples - 1);
  const double half = 0.5 * grid.pupil_samples;
  return std::hypot(x - c, y - c) / half * (wavelength_nm / grid.sampling_wavelength_nm);
}

ComplexField build_pupil(const PhaseMask& mask, double psi, double wavelength_nm, const GridSpec& grid) {
  grid.validate();
  mask.validate();
  if (!(wavelength_nm > 0)) throw DomainError("wavelength must be positive");
  if (wavelength_nm < grid.sampling_wavelength_nm)
    throw ValidationError("wavelength below the grid sampling wavelength would clip the pupil");
  const double psi_lambda = psi_at_wavelength(psi, mask.reference_wavelength_nm, wavelength_nm);
  const int n = grid.pupil_samples;
  ComplexField field{n, n, std::vector<std::complex<double>>(static_cast<std::size_t>(n) * n)};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double rho = pupil_radius(grid, x, y, wavelength_nm);
      if (rho > 1.0) continue;
      const double phase = mask.phase_at(rho, wavelength_nm) + psi_lambda * rho * rho;
      field.at(x, y) = std::polar(1.0, phase);
    }
  return field;
}

MonochromePsf psf_monochrome_with_energy(const ComplexField& pupil, const GridSpec& grid) {
  grid.validate();
  const int n = grid.pupil_samples;
  if (pupil.width != n || pupil.height != n || pupil.values.size() != static_cast<std::size_t>(n) * n)
    throw ValidationError("pupil dimensions do not match the grid");
  const int m = grid.padded_size();
  std::vector<fft::Complex> buf(static_cast<std::size_t>(m) * m);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) buf[static_cast<std::size_t>(y) * m + x] = pupil.at(x, y);
  fft::dft2d(buf, m, m, fft::Direction::Forward);

  double total = 0;
  for (const auto& v : buf) total += std::norm(v);
  if (!(total > 0)) throw DegeneratePupilError("pupil carries no energy");

  const int crop = grid.psf_crop;
  const int half = crop / 2;
  Image psf(crop, crop);
  for (int cy = 0; cy < crop; ++cy) {
    const int ky = ((cy - half) % m + m) % m;
    for (int cx = 0; cx < crop; ++cx) {
      const int kx = ((cx - half) % m + m) % m;
      psf(cx, cy) = std::norm(buf[static_cast<std::size_t>(ky) * m + kx]);
    }
  }
  const double captured = psf.sum();
  if (!(captured > 0)) throw DegeneratePupilError("PSF window carries no energy");
  psf *= 1.0 / captured;
  return {std::move(psf), captured / total};
}

Image psf_monochrome(const ComplexField& pupil, const GridSpec& grid) {
  return psf_monochrome_with_energy(pupil, grid).psf;
}

RgbImage psf_rgb(const PhaseMask& mask, double psi_ref, const SpectralBands& bands, const GridSpec& grid) {
  bands.validate();
  RgbImage out;
  for (Channel c : kChannels)
    out[c] = psf_monochrome(build_pupil(mask, psi_ref, bands[c], grid), grid);
  return out;
}

double channel_width(const Image& psf) {
  double mass = 0, mx = 0, my = 0;
  for (int y = 0; y < psf.height(); ++y)
    for (int x = 0; x < psf.width(); ++x) {
      const double p = psf(x, y);
      mass += p;
      mx += p * x;
      my += p * y;
    }
  if (!(mass > 0)) throw DomainError("channel_width of a zero-mass image");
  mx /= mass;
  my /= mass;
  double m2 = 0;
  for (int y = 0; y < psf.height(); ++y)
    for (int x = 0; x < psf.width(); ++x) {
      const double dx = x - mx, dy = y - my;
      m2 += psf(x, y) * (dx * dx + dy * dy);
    }
  return std::sqrt(std::max(0.0, m2 / mass));
}

PsfStack psf_stack(const PhaseMask& mask, std::span<const double> psi_per_step, const SpectralBands& bands,
                   const GridSpec& grid) {
  bands.validate();
  PsfStack stack;
  for (Channel c : kChannels) {
    const int ci = static_cast<int>(c);
    for (double psi : psi_per_step) {
      auto mono = psf_monochrome_with_energy(build_pupil(mask, psi, bands[c], grid), grid);
      stack.psfs[ci].push_back(std::move(mono.psf));
      stack.energy[ci].push_back(mono.crop_fraction);
    }
  }
  return stack;
}

}  // namespace chromacode::optics
