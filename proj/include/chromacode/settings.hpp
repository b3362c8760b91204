#pragma once

#include <string>

#include "chromacode/config.hpp"
#include "chromacode/imaging.hpp"
#include "chromacode/optics.hpp"
#include "chromacode/temporal.hpp"

// Mapping between dotted configuration keys and the module types.
//
//   mask.preset                two_ring | clear (ignored when mask.rings is set)
//   mask.rings                 [{r_inner, r_outer, phase_rad}, ...]
//   mask.reference_wavelength_nm
//   camera.kind                static | flutter | parabolic | phase_sweep
//   camera.flutter_code        string of 0/1
//   camera.v_max, camera.psi_start, camera.psi_end
//   bands.wavelength_nm        [R, G, B]
//   grid.pupil_samples, grid.pad_factor, grid.psf_crop, grid.sampling_wavelength_nm
namespace chromacode::settings {

optics::PhaseMask mask_from(const Config& cfg);
temporal::CameraCoding coding_from(const Config& cfg, temporal::CodingKind fallback = temporal::CodingKind::PhaseSweep);
imaging::OpticalSystem optics_from(const Config& cfg);

void store(Config& cfg, const optics::PhaseMask& mask);
void store(Config& cfg, const temporal::CameraCoding& coding);
void store(Config& cfg, const imaging::OpticalSystem& optics);

/// Round-trip decimal text of a double, usable as a YAML scalar.
std::string yaml_number(double v);

}  // namespace chromacode::settings
