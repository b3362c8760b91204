#include "chromacode/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chromacode/errors.hpp"

namespace chromacode::temporal {

const char* to_string(CodingKind kind) {
  switch (kind) {
    case CodingKind::Static: return "static";
    case CodingKind::FlutteredShutter: return "flutter";
    case CodingKind::ParabolicMotion: return "parabolic";
    case CodingKind::PhaseSweep: return "phase_sweep";
  }
  return "unknown";
}

CodingKind parse_coding_kind(std::string_view name) {
  if (name == "static") return CodingKind::Static;
  if (name == "flutter" || name == "fluttered_shutter") return CodingKind::FlutteredShutter;
  if (name == "parabolic" || name == "parabolic_motion") return CodingKind::ParabolicMotion;
  if (name == "phase_sweep" || name == "phase") return CodingKind::PhaseSweep;
  throw ValidationError("unknown camera kind '" + std::string(name) + "'");
}

std::string_view default_flutter_code() {
  return "1010000111000001010000110011110111010111001001100111";
}

std::vector<std::uint8_t> parse_flutter_code(std::string_view bits) {
  std::vector<std::uint8_t> code;
  code.reserve(bits.size());
  for (char ch : bits) {
    if (ch == '0' || ch == '1')
      code.push_back(static_cast<std::uint8_t>(ch - '0'));
    else
      throw ValidationError("flutter code may contain only '0' and '1'");
  }
  return code;
}

std::string format_flutter_code(const std::vector<std::uint8_t>& code) {
  std::string s;
  for (auto b : code) s.push_back(b ? '1' : '0');
  return s;
}

CameraCoding CameraCoding::static_camera() { return CameraCoding{}; }

CameraCoding CameraCoding::fluttered(std::vector<std::uint8_t> code) {
  CameraCoding c;
  c.kind = CodingKind::FlutteredShutter;
  c.flutter_code = std::move(code);
  return c;
}

CameraCoding CameraCoding::parabolic(double v_max_px) {
  CameraCoding c;
  c.kind = CodingKind::ParabolicMotion;
  c.v_max_px = v_max_px;
  return c;
}

CameraCoding CameraCoding::phase_sweep(optics::PhaseMask mask, double psi_start, double psi_end) {
  CameraCoding c;
  c.kind = CodingKind::PhaseSweep;
  c.mask = std::move(mask);
  c.psi_start = psi_start;
  c.psi_end = psi_end;
  return c;
}

void CameraCoding::validate() const {
  switch (kind) {
    case CodingKind::FlutteredShutter:
      if (flutter_code.empty() || std::none_of(flutter_code.begin(), flutter_code.end(), [](auto b) { return b; }))
        throw ValidationError("flutter code must be non-empty and contain at least one open chop");
      break;
    case CodingKind::ParabolicMotion:
      if (!std::isfinite(v_max_px) || v_max_px < 0) throw ValidationError("v_max must be finite and >= 0");
      break;
    case CodingKind::PhaseSweep:
      if (!std::isfinite(psi_start) || !std::isfinite(psi_end)) throw ValidationError("psi range must be finite");
      mask.validate();
      break;
    case CodingKind::Static:
      break;
  }
}

optics::PhaseMask CameraCoding::aperture() const {
  return kind == CodingKind::PhaseSweep ? mask : optics::PhaseMask::clear(mask.reference_wavelength_nm);
}

std::string CameraCoding::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind);
  switch (kind) {
    case CodingKind::FlutteredShutter: os << ";code=" << format_flutter_code(flutter_code); break;
    case CodingKind::ParabolicMotion: os << ";vmax=" << v_max_px; break;
    case CodingKind::PhaseSweep: os << ";psi=[" << psi_start << "," << psi_end << "];" << mask.fingerprint(); break;
    case CodingKind::Static: break;
  }
  return os.str();
}

std::vector<double> ExposureSchedule::psis() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.psi);
  return out;
}

ExposureSchedule make_schedule(const CameraCoding& coding, int n_steps) {
  if (n_steps <= 0) throw DomainError("n_steps must be positive");
  coding.validate();
  const auto n = static_cast<std::size_t>(n_steps);
  std::size_t steps_per_chop = 1;
  if (coding.kind == CodingKind::FlutteredShutter) {
    const std::size_t len = coding.flutter_code.size();
    if (n % len != 0)
      throw ValidationError("n_steps (" + std::to_string(n) + ") must be a multiple of the flutter code length (" +
                            std::to_string(len) + ")");
    steps_per_chop = n / len;
  }

  ExposureSchedule schedule;
  schedule.steps.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = schedule.steps[k];
    s.t_norm = n == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(n - 1);
    switch (coding.kind) {
      case CodingKind::Static: break;
      case CodingKind::PhaseSweep:
        if (n == 1)
          s.psi = 0.5 * (coding.psi_start + coding.psi_end);
        else  // endpoints land exactly on the configured range
          s.psi = coding.psi_start + static_cast<double>(k) * (coding.psi_end - coding.psi_start) /
                                         static_cast<double>(n - 1);
        break;
      case CodingKind::FlutteredShutter: s.shutter_open = coding.flutter_code[k / steps_per_chop] != 0; break;
      case CodingKind::ParabolicMotion: {
        // Constant acceleration 2 v_max centred on mid-exposure, so the sensor
        // velocity runs linearly from -v_max to +v_max.
        const double accel = 2.0 * coding.v_max_px;
        const double dt = s.t_norm - 0.5;
        s.shift_x = 0.5 * accel * dt * dt;
        break;
      }
    }
  }
  const auto open = std::count_if(schedule.steps.begin(), schedule.steps.end(),
                                  [](const ExposureStep& s) { return s.shutter_open; });
  for (auto& s : schedule.steps) s.weight = s.shutter_open ? 1.0 / static_cast<double>(open) : 0.0;
  return schedule;
}

double open_fraction(const ExposureSchedule& schedule) {
  if (schedule.steps.empty()) return 0.0;
  const auto open = std::count_if(schedule.steps.begin(), schedule.steps.end(),
                                  [](const ExposureStep& s) { return s.shutter_open; });
  return static_cast<double>(open) / static_cast<double>(schedule.steps.size());
}

int compatible_step_count(const CameraCoding& coding, int requested) {
  if (requested <= 0) throw DomainError("n_steps must be positive");
  if (coding.kind != CodingKind::FlutteredShutter) return requested;
  const int len = static_cast<int>(coding.flutter_code.size());
  if (len == 0) throw ValidationError("empty flutter code");
  const int chops = std::max(1, static_cast<int>(std::lround(static_cast<double>(requested) / len)));
  return chops * len;
}

}  // namespace chromacode::temporal
