#include "chromacode/settings.hpp"

#include <charconv>

namespace chromacode::settings {

std::string yaml_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

optics::PhaseMask mask_from(const Config& cfg) {
  optics::PhaseMask mask;
  const auto rings = cfg.get_list("mask.rings");
  if (!rings.empty()) {
    for (const auto& r : rings)
      mask.rings.push_back({r.get_double("r_inner", 0), r.get_double("r_outer", 0), r.get_double("phase_rad", 0)});
  } else {
    const auto preset = cfg.get_string("mask.preset", "two_ring");
    if (preset == "two_ring") mask = optics::PhaseMask::two_ring();
    else if (preset == "clear") mask = optics::PhaseMask::clear();
    else throw ConfigError("unknown mask.preset '" + preset + "'");
  }
  mask.reference_wavelength_nm = cfg.get_double("mask.reference_wavelength_nm", mask.reference_wavelength_nm);
  try {
    mask.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("mask: ") + e.what());
  }
  return mask;
}

temporal::CameraCoding coding_from(const Config& cfg, temporal::CodingKind fallback) {
  temporal::CameraCoding coding;
  try {
    coding.kind = cfg.has("camera.kind") ? temporal::parse_coding_kind(cfg.get_string("camera.kind", ""))
                                         : fallback;
    coding.flutter_code = temporal::parse_flutter_code(
        cfg.get_string("camera.flutter_code", std::string(temporal::default_flutter_code())));
    coding.v_max_px = cfg.get_double("camera.v_max", 10.0);
    coding.psi_start = cfg.get_double("camera.psi_start", 0.0);
    coding.psi_end = cfg.get_double("camera.psi_end", 8.0);
    coding.mask = mask_from(cfg);
    coding.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("camera: ") + e.what());
  }
  return coding;
}

imaging::OpticalSystem optics_from(const Config& cfg) {
  imaging::OpticalSystem sys;
  const auto wl = cfg.get_doubles("bands.wavelength_nm", {610.0, 530.0, 455.0});
  if (wl.size() != 3) throw ConfigError("bands.wavelength_nm needs three values");
  for (int c = 0; c < 3; ++c) sys.bands.wavelength_nm[c] = wl[c];
  sys.grid.pupil_samples = cfg.get_int("grid.pupil_samples", sys.grid.pupil_samples);
  sys.grid.pad_factor = cfg.get_int("grid.pad_factor", sys.grid.pad_factor);
  sys.grid.psf_crop = cfg.get_int("grid.psf_crop", sys.grid.psf_crop);
  sys.grid.sampling_wavelength_nm = cfg.get_double("grid.sampling_wavelength_nm", sys.grid.sampling_wavelength_nm);
  try {
    sys.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("optics: ") + e.what());
  }
  return sys;
}

void store(Config& cfg, const optics::PhaseMask& mask) {
  std::string rings = "[";
  for (std::size_t i = 0; i < mask.rings.size(); ++i) {
    const auto& r = mask.rings[i];
    if (i) rings += ", ";
    rings += "{r_inner: " + yaml_number(r.r_inner) + ", r_outer: " + yaml_number(r.r_outer) +
             ", phase_rad: " + yaml_number(r.phase_rad) + "}";
  }
  rings += "]";
  cfg.set("mask.rings", rings);
  cfg.set("mask.reference_wavelength_nm", yaml_number(mask.reference_wavelength_nm));
}

void store(Config& cfg, const temporal::CameraCoding& coding) {
  cfg.set("camera.kind", temporal::to_string(coding.kind));
  if (!coding.flutter_code.empty())
    cfg.set("camera.flutter_code", "'" + temporal::format_flutter_code(coding.flutter_code) + "'");
  cfg.set("camera.v_max", yaml_number(coding.v_max_px));
  cfg.set("camera.psi_start", yaml_number(coding.psi_start));
  cfg.set("camera.psi_end", yaml_number(coding.psi_end));
  store(cfg, coding.mask);
}

void store(Config& cfg, const imaging::OpticalSystem& optics) {
  const auto& wl = optics.bands.wavelength_nm;
  cfg.set("bands.wavelength_nm", "[" + yaml_number(wl[0]) + ", " + yaml_number(wl[1]) + ", " + yaml_number(wl[2]) + "]");
  cfg.set("grid.pupil_samples", std::to_string(optics.grid.pupil_samples));
  cfg.set("grid.pad_factor", std::to_string(optics.grid.pad_factor));
  cfg.set("grid.psf_crop", std::to_string(optics.grid.psf_crop));
  cfg.set("grid.sampling_wavelength_nm", yaml_number(optics.grid.sampling_wavelength_nm));
}

}  // namespace chromacode::settings
