#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chromacode/optics.hpp"

namespace chromacode::temporal {

enum class CodingKind { Static, FlutteredShutter, ParabolicMotion, PhaseSweep };

const char* to_string(CodingKind kind);
CodingKind parse_coding_kind(std::string_view name);

/// 52-chop near-optimal fluttered-shutter code with 26 open chops.
std::string_view default_flutter_code();

/// Parses a string of '0'/'1' characters.
std::vector<std::uint8_t> parse_flutter_code(std::string_view bits);
std::string format_flutter_code(const std::vector<std::uint8_t>& code);

struct CameraCoding {
  CodingKind kind = CodingKind::Static;
  std::vector<std::uint8_t> flutter_code;  ///< FlutteredShutter only
  double v_max_px = 0;                     ///< ParabolicMotion only, px per exposure
  double psi_start = 0;                    ///< PhaseSweep only
  double psi_end = 8;
  optics::PhaseMask mask = optics::PhaseMask::clear();  ///< PhaseSweep only

  static CameraCoding static_camera();
  static CameraCoding fluttered(std::vector<std::uint8_t> code = parse_flutter_code(default_flutter_code()));
  static CameraCoding parabolic(double v_max_px);
  static CameraCoding phase_sweep(optics::PhaseMask mask = optics::PhaseMask::two_ring(), double psi_start = 0,
                                  double psi_end = 8);

  void validate() const;
  /// Aperture used for imaging: the mask for PhaseSweep, clear otherwise.
  optics::PhaseMask aperture() const;
  std::string fingerprint() const;
};

struct ExposureStep {
  double t_norm = 0;
  double psi = 0;
  double shift_x = 0;
  double shift_y = 0;
  bool shutter_open = true;
  double weight = 0;  ///< 1 / number of open steps, 0 when closed
};

struct ExposureSchedule {
  std::vector<ExposureStep> steps;

  std::size_t size() const { return steps.size(); }
  std::vector<double> psis() const;
};

/// Uniform time discretization: t_k = k / (n - 1), or 0.5 for a single step.
ExposureSchedule make_schedule(const CameraCoding& coding, int n_steps);

/// Fraction of steps with the shutter open.
double open_fraction(const ExposureSchedule& schedule);

/// Nearest step count the coding accepts: flutter codes need a multiple of
/// their length, every other coding accepts any positive count.
int compatible_step_count(const CameraCoding& coding, int requested);

}  // namespace chromacode::temporal
