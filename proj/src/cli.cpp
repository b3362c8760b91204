#include "chromacode/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "chromacode/config.hpp"
#include "chromacode/dataset.hpp"
#include "chromacode/errors.hpp"
#include "chromacode/imaging.hpp"
#include "chromacode/io.hpp"
#include "chromacode/metrics.hpp"
#include "chromacode/optics.hpp"
#include "chromacode/reconstruction.hpp"
#include "chromacode/settings.hpp"
#include "chromacode/spectral.hpp"
#include "chromacode/temporal.hpp"
#include "json.hpp"

namespace chromacode::cli {

namespace fs = std::filesystem;
using settings::yaml_number;
using temporal::CameraCoding;
using temporal::CodingKind;

namespace {

struct Options {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool viz = false;
  bool clear_aperture = false;
};

// Config view that writes every effective value back, so the provenance
// file lists defaults as well as explicit settings.
class Resolved {
 public:
  explicit Resolved(Config cfg) : cfg_(std::move(cfg)) {}

  double num(const std::string& key, double def) {
    const double v = cfg_.get_double(key, def);
    cfg_.set(key, yaml_number(v));
    return v;
  }
  int integer(const std::string& key, int def) {
    const int v = cfg_.get_int(key, def);
    cfg_.set(key, std::to_string(v));
    return v;
  }
  std::string str(const std::string& key, const std::string& def) {
    const auto v = cfg_.get_string(key, def);
    cfg_.set(key, nlohmann::json(v).dump());
    return v;
  }
  std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
    const auto v = cfg_.get_doubles(key, def);
    std::string text = "[";
    for (std::size_t i = 0; i < v.size(); ++i) text += (i ? ", " : "") + yaml_number(v[i]);
    cfg_.set(key, text + "]");
    return v;
  }

  Config& raw() { return cfg_; }

 private:
  Config cfg_;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '"') c = '\'';
    else if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int report_error(int code, const char* kind, const std::string& message) {
  std::cerr << "error: code=" << code << " kind=" << kind << " message=\"" << one_line(message) << "\"\n";
  return code;
}

// Display helpers ----------------------------------------------------------

RgbImage scaled(const RgbImage& img, double scale) {
  RgbImage out = img;
  if (scale > 0) out *= 1.0 / scale;
  clamp_inplace(out, 0.0, 1.0);
  return out;
}

double rgb_max(const RgbImage& img) {
  return std::max({img[0].max(), img[1].max(), img[2].max()});
}

RgbImage viz_transform(const RgbImage& img) {
  RgbImage out(img.width(), img.height());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        double m = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = x + dx, sy = y + dy;
            if (sx >= 0 && sy >= 0 && sx < img.width() && sy < img.height()) m = std::max(m, img[c](sx, sy));
          }
        out[c](x, y) = std::pow(std::clamp(m, 0.0, 1.0), 1.0 / 2.2);
      }
  return out;
}

RgbImage hconcat(const std::vector<RgbImage>& parts, int gap) {
  int w = 0, h = 0;
  for (const auto& p : parts) {
    w += p.width();
    h = std::max(h, p.height());
  }
  w += gap * static_cast<int>(parts.size() > 0 ? parts.size() - 1 : 0);
  RgbImage out(w, h);
  int x0 = 0;
  for (const auto& p : parts) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) out[c](x0 + x, y) = p[c](x, y);
    x0 += p.width() + gap;
  }
  return out;
}

RgbImage vconcat(const std::vector<RgbImage>& parts, int gap) {
  int w = 0, h = 0;
  for (const auto& p : parts) {
    h += p.height();
    w = std::max(w, p.width());
  }
  h += gap * static_cast<int>(parts.size() > 0 ? parts.size() - 1 : 0);
  RgbImage out(w, h);
  int y0 = 0;
  for (const auto& p : parts) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) out[c](x, y0 + y) = p[c](x, y);
    y0 += p.height() + gap;
  }
  return out;
}

void save_png(const Options& o, const std::string& name, const RgbImage& img) {
  io::write_png(fs::path(o.out) / (name + ".png"), img);
  if (o.viz) {
    fs::create_directories(fs::path(o.out) / "viz");
    io::write_png(fs::path(o.out) / "viz" / (name + ".png"), viz_transform(img));
  }
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// psf ----------------------------------------------------------------------

void cmd_psf(Resolved& s, const Options& o) {
  if (o.clear_aperture) s.raw().set("mask.preset", "clear");
  const auto mask = o.clear_aperture ? optics::PhaseMask::clear() : settings::mask_from(s.raw());
  if (!o.clear_aperture) settings::store(s.raw(), mask);
  const auto sys = settings::optics_from(s.raw());
  settings::store(s.raw(), sys);
  const double psi_min = s.num("psf.psi_min", 0.0);
  const double psi_max = s.num("psf.psi_max", 8.0);
  const int count = s.integer("psf.count", 9);
  if (count < 1) throw ConfigError("psf.count must be >= 1");

  std::ofstream csv(fs::path(o.out) / "widths.csv");
  csv << "psi,width_R,width_G,width_B,min_channel\n";
  std::vector<RgbImage> strip;
  for (int i = 0; i < count; ++i) {
    const double psi = count == 1 ? psi_min : psi_min + (psi_max - psi_min) * i / (count - 1);
    const auto psf = optics::psf_rgb(mask, psi, sys.bands, sys.grid);
    const std::string name = "psf_psi" + tag(psi);
    RgbImage display = psf;
    for (int c = 0; c < 3; ++c) display[c] *= 1.0 / psf[c].max();
    save_png(o, name, display);
    io::write_pfm(fs::path(o.out) / (name + ".pfm"), psf);
    strip.push_back(display);

    std::array<double, 3> w{};
    for (int c = 0; c < 3; ++c) w[c] = optics::channel_width(psf[c]);
    const int min_c = static_cast<int>(std::min_element(w.begin(), w.end()) - w.begin());
    csv << metrics::format_number(psi) << ',' << metrics::format_number(w[0]) << ',' << metrics::format_number(w[1])
        << ',' << metrics::format_number(w[2]) << ',' << channel_name(static_cast<Channel>(min_c)) << '\n';
  }
  save_png(o, "psf_strip", hconcat(strip, 2));
}

// dots ---------------------------------------------------------------------

imaging::PointScene scene_from(Resolved& s) {
  imaging::PointScene scene;
  scene.width = s.integer("dots.width", 256);
  scene.height = s.integer("dots.height", 160);
  for (const auto& p : s.raw().get_list("dots.points")) {
    imaging::ScenePoint pt;
    pt.x0 = p.get_double("x", 0);
    pt.y0 = p.get_double("y", 0);
    pt.vx = p.get_double("vx", 0);
    pt.vy = p.get_double("vy", 0);
    const auto rgb = p.get_doubles("rgb", {1, 1, 1});
    if (rgb.size() != 3) throw ConfigError("dots.points rgb needs three values");
    pt.rgb = {rgb[0], rgb[1], rgb[2]};
    scene.points.push_back(pt);
  }
  if (scene.points.empty()) {
    scene.points = {{56, 40, 24, 0, {1, 1, 1}}, {196, 120, -16, 0, {1, 1, 1}}, {128, 80, 0, 0, {1, 1, 1}},
                    {56, 120, 12, -12, {1, 1, 1}}};
    std::string text = "[";
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      const auto& p = scene.points[i];
      text += std::string(i ? ", " : "") + "{x: " + yaml_number(p.x0) + ", y: " + yaml_number(p.y0) +
              ", vx: " + yaml_number(p.vx) + ", vy: " + yaml_number(p.vy) + ", rgb: [1.0, 1.0, 1.0]}";
    }
    s.raw().set("dots.points", text + "]");
  }
  try {
    scene.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("dots: ") + e.what());
  }
  return scene;
}

std::vector<CameraCoding> all_codings(Resolved& s, double default_vmax) {
  Config& cfg = s.raw();
  if (!cfg.has("camera.v_max")) cfg.set("camera.v_max", yaml_number(default_vmax));
  const auto base = settings::coding_from(cfg);
  std::vector<CameraCoding> out;
  for (auto kind : {CodingKind::Static, CodingKind::FlutteredShutter, CodingKind::ParabolicMotion,
                    CodingKind::PhaseSweep}) {
    CameraCoding c = base;
    c.kind = kind;
    c.validate();
    out.push_back(c);
  }
  settings::store(cfg, base);
  cfg.set("camera.kind", "all");
  return out;
}

void cmd_dots(Resolved& s, const Options& o) {
  const auto scene = scene_from(s);
  const auto sys = settings::optics_from(s.raw());
  settings::store(s.raw(), sys);
  const int steps = s.integer("camera.n_steps", 64);
  const double sigma = s.num("dots.noise_sigma", 0.0);
  const auto seed = s.raw().get_u64("seed", 0);
  double vmax = 0;
  for (const auto& p : scene.points) vmax = std::max(vmax, std::abs(p.vx));
  const auto codings = all_codings(s, vmax);

  imaging::PsfCache cache;
  std::vector<RgbImage> renders;
  std::ofstream csv(fs::path(o.out) / "dots.csv");
  csv << "coding,steps,open_fraction,clipped\n";
  for (const auto& coding : codings) {
    const int n = temporal::compatible_step_count(coding, steps);
    const auto schedule = temporal::make_schedule(coding, n);
    auto coded = imaging::render_points(scene, coding, schedule, sys, &cache);
    const double light = temporal::open_fraction(schedule);
    coded.pixels *= light;
    io::write_pfm(fs::path(o.out) / (std::string("dots_") + temporal::to_string(coding.kind) + ".pfm"), coded.pixels);
    renders.push_back(coded.pixels);
    csv << temporal::to_string(coding.kind) << ',' << n << ',' << metrics::format_number(light) << ','
        << (coded.clipped ? 1 : 0) << '\n';
  }
  const double scale = rgb_max(renders[0]);
  std::vector<RgbImage> shown;
  for (std::size_t i = 0; i < renders.size(); ++i) {
    auto img = scaled(renders[i], scale);
    if (sigma > 0) img = imaging::add_awgn(img, sigma, seed + i);
    save_png(o, std::string("dots_") + temporal::to_string(codings[i].kind), img);
    shown.push_back(img);
  }
  save_png(o, "dots_montage", vconcat({hconcat({shown[0], shown[1]}, 4), hconcat({shown[2], shown[3]}, 4)}, 4));
}

// spectrum -----------------------------------------------------------------

RgbImage to_rgb(const std::array<Image, 3>& planes) {
  RgbImage out;
  out.planes = planes;
  return out;
}

void cmd_spectrum(Resolved& s, const Options& o) {
  const auto sys = settings::optics_from(s.raw());
  settings::store(s.raw(), sys);
  const auto velocities = s.nums("spectrum.velocities", {0.0, 10.0});
  const int width = s.integer("spectrum.width", 192);
  const int steps = s.integer("camera.n_steps", 64);
  const double threshold = s.num("spectrum.support_threshold", 1e-3);
  double vmax = 0;
  for (double v : velocities) vmax = std::max(vmax, std::abs(v));
  const auto codings = all_codings(s, std::max(vmax, 10.0));

  imaging::PsfCache cache;
  std::ofstream csv(fs::path(o.out) / "spectrum_metrics.csv");
  csv << "coding,velocity,phase_colorfulness,max_phase_deviation,parseval_rel_error\n";
  for (const auto& coding : codings) {
    const auto schedule = temporal::make_schedule(coding, temporal::compatible_step_count(coding, steps));
    for (double v : velocities) {
      const auto slice = spectral::xt_psf(coding, v, schedule, sys, width, &cache);
      const auto spec = spectral::xt_spectrum(slice);
      double parseval = 0;
      for (int c = 0; c < 3; ++c) {
        double e_x = 0, e_f = 0;
        for (double p : slice.channels[c].pixels()) e_x += p * p;
        for (double a : spec.amplitude[c].pixels()) e_f += a * a;
        e_f /= static_cast<double>(spec.amplitude[c].size());
        parseval = std::max(parseval, std::abs(e_x - e_f) / e_x);
      }
      const std::string name = std::string(temporal::to_string(coding.kind)) + "_v" + tag(v);
      csv << temporal::to_string(coding.kind) << ',' << metrics::format_number(v) << ','
          << metrics::format_number(spectral::phase_colorfulness(spec, threshold)) << ','
          << metrics::format_number(spectral::max_interchannel_phase_deviation(spec, threshold)) << ','
          << metrics::format_number(parseval) << '\n';

      const RgbImage slice_rgb = to_rgb(slice.channels);
      RgbImage amp(spec.width(), spec.height());
      for (int c = 0; c < 3; ++c) {
        const double peak = spec.amplitude[c].max();
        auto src = spec.amplitude[c].pixels();
        auto dst = amp[c].pixels();
        for (std::size_t i = 0; i < src.size(); ++i)
          dst[i] = std::clamp(1.0 + std::log10(std::max(src[i] / peak, 1e-12)) / 4.0, 0.0, 1.0);
      }
      const auto support = spectral::reliable_support(spec, threshold);
      double lo = 0, hi = 0;
      for (int c = 0; c < 3; ++c) {
        const double dc = spec.phase[c](spec.dc_x(), spec.dc_y());
        for (std::size_t i = 0; i < support.size(); ++i)
          if (support[i]) {
            lo = std::min(lo, spec.phase[c].pixels()[i] - dc);
            hi = std::max(hi, spec.phase[c].pixels()[i] - dc);
          }
      }
      RgbImage phase(spec.width(), spec.height());
      for (int c = 0; c < 3; ++c) {
        const double dc = spec.phase[c](spec.dc_x(), spec.dc_y());
        for (std::size_t i = 0; i < support.size(); ++i)
          phase[c].pixels()[i] =
              support[i] && hi > lo ? (spec.phase[c].pixels()[i] - dc - lo) / (hi - lo) : (support[i] ? 0.5 : 0.0);
      }
      const auto slice_shown = scaled(slice_rgb, rgb_max(slice_rgb));
      save_png(o, name + "_slice", slice_shown);
      save_png(o, name + "_amplitude", amp);
      save_png(o, name + "_phase", phase);
      save_png(o, name + "_panel", hconcat({slice_shown, amp, phase}, 4));
      io::write_pfm(fs::path(o.out) / (name + "_slice.pfm"), slice_rgb);
      io::write_pfm(fs::path(o.out) / (name + "_amplitude.pfm"), to_rgb(spec.amplitude));
      io::write_pfm(fs::path(o.out) / (name + "_phase.pfm"), to_rgb(spec.phase));
    }
  }
}

// dataset ------------------------------------------------------------------

int cmd_dataset(Resolved& s, const Options& o) {
  const auto frame_root = s.raw().get_string("dataset.frame_root", "");
  if (frame_root.empty()) throw ConfigError("dataset.frame_root is not set");
  if (!fs::is_directory(frame_root)) throw ConfigError("dataset.frame_root is not a directory: " + frame_root);
  const auto config = dataset::DatasetConfig::from_config(s.raw());
  Config resolved = config.to_config();
  resolved.set("dataset.frame_root", nlohmann::json(frame_root).dump());
  s.raw() = resolved;

  const auto report = dataset::build_dataset(frame_root, config, o.out);
  const auto verify = dataset::verify_manifest(fs::path(o.out) / "manifest.jsonl");
  nlohmann::json j;
  j["pairs"] = report.manifest.records.size();
  j["skipped_windows"] = report.skipped_windows;
  j["record_errors"] = report.errors;
  j["verify"] = {{"ok", verify.ok()},
                 {"violations", verify.violations},
                 {"missing_files", verify.missing_files},
                 {"regenerated", verify.regenerated}};
  std::ofstream(fs::path(o.out) / "build_report.json") << j.dump(2) << '\n';
  for (const auto& e : report.errors) std::cerr << "warning: kind=record message=\"" << one_line(e) << "\"\n";
  if (report.skipped_windows)
    std::cerr << "warning: kind=skipped count=" << report.skipped_windows << " message=\"video shorter than window\"\n";
  std::cout << "pairs=" << report.manifest.records.size() << " skipped=" << report.skipped_windows
            << " errors=" << report.errors.size() << " verified=" << (verify.ok() ? "yes" : "no") << "\n";
  if (!verify.ok()) {
    for (const auto& v : verify.violations) std::cerr << "violation: message=\"" << one_line(v) << "\"\n";
    return report_error(kDataError, "data", "manifest verification failed");
  }
  if (!report.errors.empty())
    return report_error(kDataError, "data", std::to_string(report.errors.size()) + " windows could not be rendered");
  return kOk;
}

// deconv -------------------------------------------------------------------

std::vector<fs::path> input_files(const fs::path& input) {
  if (!fs::exists(input)) throw ConfigError("input does not exist: " + input.string());
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pfm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

RgbImage load_rgb(const fs::path& p) {
  return p.extension() == ".pfm" ? io::read_pfm_rgb(p) : io::read_png(p);
}

RgbImage load_kernel(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("psf file does not exist: " + p.string());
  std::ifstream in(p, std::ios::binary);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic == "Pf") {
    const Image k = io::read_pfm_gray(p);
    RgbImage out;
    out.planes = {k, k, k};
    return out;
  }
  return io::read_pfm_rgb(p);
}

void cmd_deconv(Resolved& s, const Options& o) {
  const auto method = s.str("deconv.method", "lr");
  const auto input = s.str("deconv.input", "");
  const auto reference = s.str("deconv.reference", "");
  if (input.empty()) throw ConfigError("deconv.input is not set");
  recon::DeconvParams params;
  params.iterations = s.integer("deconv.iterations", params.iterations);
  params.epsilon = s.num("deconv.epsilon", params.epsilon);
  params.regularization_lambda = s.num("deconv.lambda", method == "flutter" ? 1e-3 : 0.0);
  try {
    params.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }

  RgbImage kernel;
  std::vector<std::uint8_t> code;
  int motion_len = 0;
  recon::Axis axis = recon::Axis::X;
  if (method == "lr") {
    const auto psf = s.str("deconv.psf", "");
    if (psf.empty()) throw ConfigError("deconv.psf is required for method lr");
    kernel = load_kernel(psf);
  } else if (method == "parabolic") {
    const auto k = recon::parabolic_kernel(s.num("camera.v_max", 10.0), s.integer("camera.n_steps", 64));
    kernel.planes = {k, k, k};
  } else if (method == "flutter") {
    try {
      code = temporal::parse_flutter_code(s.str("camera.flutter_code", std::string(temporal::default_flutter_code())));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    motion_len = s.integer("deconv.motion_len", static_cast<int>(code.size()));
    const auto ax = s.str("deconv.axis", "x");
    if (ax != "x" && ax != "y") throw ConfigError("deconv.axis must be x or y");
    axis = ax == "x" ? recon::Axis::X : recon::Axis::Y;
  } else {
    throw ConfigError("unknown deconv.method '" + method + "' (lr, parabolic, flutter)");
  }

  const auto files = input_files(input);
  if (files.empty()) throw ConfigError("no .png or .pfm inputs in " + input);
  std::ofstream csv;
  if (!reference.empty()) {
    if (!fs::is_directory(reference)) throw ConfigError("deconv.reference is not a directory: " + reference);
    csv.open(fs::path(o.out) / "deconv.csv");
    csv << "file,psnr_input,psnr_output\n";
  }
  for (const auto& f : files) {
    const auto blurred = load_rgb(f);
    RgbImage restored;
    if (method == "flutter") {
      restored = recon::flutter_invert(blurred, code, motion_len, axis, params).image;
    } else {
      RgbImage nonneg = blurred;
      clamp_inplace(nonneg, 0.0, std::numeric_limits<double>::infinity());
      restored = recon::lucy_richardson(nonneg, kernel, params);
    }
    const auto stem = f.stem().string();
    io::write_pfm(fs::path(o.out) / (stem + ".pfm"), restored);
    RgbImage shown = restored;
    clamp_inplace(shown, 0.0, 1.0);
    save_png(o, stem, shown);
    if (csv.is_open()) {
      fs::path ref = fs::path(reference) / f.filename();
      if (!fs::exists(ref)) throw DataError("no reference for " + f.filename().string());
      const auto truth = load_rgb(ref);
      csv << f.filename().string() << ',' << metrics::format_number(metrics::psnr(blurred, truth)) << ','
          << metrics::format_number(metrics::psnr(shown, truth)) << '\n';
    }
  }
}

// eval ---------------------------------------------------------------------

void cmd_eval(Resolved& s, const Options& o) {
  const auto pred = s.str("eval.pred_dir", "");
  const auto ref = s.str("eval.ref_dir", "");
  const auto manifest_path = s.str("eval.manifest", "");
  if (pred.empty() || ref.empty()) throw ConfigError("eval.pred_dir and eval.ref_dir must be set");
  if (!fs::is_directory(pred)) throw ConfigError("eval.pred_dir is not a directory: " + pred);
  if (!fs::is_directory(ref)) throw ConfigError("eval.ref_dir is not a directory: " + ref);

  std::map<std::string, std::pair<int, double>> groups;
  if (!manifest_path.empty()) {
    if (!fs::exists(manifest_path)) throw ConfigError("eval.manifest does not exist: " + manifest_path);
    for (const auto& r : dataset::Manifest::read_jsonl(manifest_path).records)
      groups[r.pair_id] = {r.sequence_length, r.sigma};
  }
  static const std::regex id_pattern(R"(_L(\d+)_s([0-9.eE+\-]+|inf|nan)$)");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(pred))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .png files in " + pred);

  metrics::EvalReport report;
  std::ofstream pairs(fs::path(o.out) / "eval_pairs.csv");
  pairs << "file,seq_len,sigma,psnr,ssim\n";
  for (const auto& f : files) {
    const fs::path r = fs::path(ref) / f.filename();
    if (!fs::exists(r)) throw DataError("no reference image for " + f.filename().string());
    const auto a = io::read_png(f);
    const auto b = io::read_png(r);
    if (!a.same_shape(b)) throw DataError("size mismatch for " + f.filename().string());
    const auto stem = f.stem().string();
    int len = 0;
    double sigma = 0;
    if (auto it = groups.find(stem); it != groups.end()) {
      std::tie(len, sigma) = it->second;
    } else if (std::smatch m; std::regex_search(stem, m, id_pattern)) {
      len = std::stoi(m[1].str());
      sigma = std::stod(m[2].str());
    }
    const double p = metrics::psnr(a, b);
    const double q = metrics::ssim(a, b);
    report.add(len, sigma, p, q);
    pairs << f.filename().string() << ',' << len << ',' << metrics::format_number(sigma) << ','
          << metrics::format_number(p) << ',' << metrics::format_number(q) << '\n';
  }
  report.write_csv(fs::path(o.out) / "eval.csv");
  std::ofstream by_len(fs::path(o.out) / "eval_by_length.csv");
  by_len << "seq_len,psnr,ssim\n";
  for (const auto& row : report.by_length())
    by_len << row.seq_len << ',' << metrics::format_number(row.psnr) << ',' << metrics::format_number(row.ssim)
           << '\n';
  std::ofstream(fs::path(o.out) / "eval_summary.json") << report.summary_json() << '\n';
}

int dispatch(const Options& o) {
  Config cfg;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw ConfigError("config file does not exist: " + o.config_path);
    cfg = Config::load(o.config_path);
  }
  for (const auto& kv : o.overrides) cfg.set(kv);
  if (o.seed) {
    cfg.set("seed", std::to_string(*o.seed));
    cfg.set("dataset.seed", std::to_string(*o.seed));
  }
  Resolved s(std::move(cfg));
  s.raw().set("seed", std::to_string(s.raw().get_u64("seed", 0)));

  fs::create_directories(o.out);
  int code = kOk;
  if (o.command == "psf") cmd_psf(s, o);
  else if (o.command == "dots") cmd_dots(s, o);
  else if (o.command == "spectrum") cmd_spectrum(s, o);
  else if (o.command == "dataset") code = cmd_dataset(s, o);
  else if (o.command == "deconv") cmd_deconv(s, o);
  else if (o.command == "eval") cmd_eval(s, o);
  Config provenance = s.raw();
  provenance.set("command", o.command);
  std::ofstream(fs::path(o.out) / "resolved_config.yaml") << provenance.dump();
  return code;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Spatiotemporal phase-coded motion imaging toolkit", "chromacode"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"psf", "through-focus RGB PSFs and channel widths"},
      {"dots", "moving point scene under the four codings"},
      {"spectrum", "(x,t) PSF slices and their spectra"},
      {"dataset", "build and verify a coded-blur dataset"},
      {"deconv", "classical deconvolution baselines"},
      {"eval", "PSNR/SSIM report grouped by length and noise"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "YAML configuration file");
    sub->add_option("--set", o.overrides, "override, key=value (repeatable)")->take_all();
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_flag("--viz", o.viz, "also write gamma/dilation visualizations to <out>/viz");
    if (std::string(name) == "psf") sub->add_flag("--clear-aperture", o.clear_aperture, "ignore the phase mask");
    sub->callback([&o, n = std::string(name)] { o.command = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error(kUsageError, "usage", e.what());
  }

  try {
    return dispatch(o);
  } catch (const ConfigError& e) {
    return report_error(kUsageError, "config", e.what());
  } catch (const ValidationError& e) {
    return report_error(kUsageError, "validation", e.what());
  } catch (const DomainError& e) {
    return report_error(kUsageError, "domain", e.what());
  } catch (const DataError& e) {
    return report_error(kDataError, "data", e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(kDataError, "data", e.what());
  } catch (const std::exception& e) {
    return report_error(kDataError, "internal", e.what());
  }
}

}  // namespace chromacode::cli
