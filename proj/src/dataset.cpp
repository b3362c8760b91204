#include "chromacode/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <cctype>
#include <set>
#include <thread>

#include "chromacode/errors.hpp"
#include "chromacode/io.hpp"
#include "chromacode/metrics.hpp"
#include "chromacode/settings.hpp"
#include "json.hpp"

namespace chromacode::dataset {

using nlohmann::json;

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw DataError("unknown split '" + s + "'");
}

void DatasetConfig::validate() const {
  if (sequence_lengths.empty()) throw ValidationError("dataset.sequence_lengths is empty");
  for (int len : sequence_lengths) {
    if (len < 1 || len % 2 == 0) throw ValidationError("sequence lengths must be odd and positive");
    if (coding.kind == temporal::CodingKind::FlutteredShutter &&
        len % static_cast<int>(coding.flutter_code.size()) != 0)
      throw ValidationError("sequence length " + std::to_string(len) + " is not a multiple of the flutter code length");
  }
  if (noise_sigmas.empty()) throw ValidationError("dataset.noise_sigmas is empty");
  for (double s : noise_sigmas)
    if (!(s >= 0)) throw ValidationError("noise sigmas must be non-negative");
  if (stride < 0) throw ValidationError("dataset.stride must be positive (0 = window length)");
  if (split.train < 0 || split.val < 0 || split.test < 0 ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9)
    throw ValidationError("split fractions must be non-negative and sum to 1");
  if (!(gamma > 0)) throw ValidationError("dataset.gamma must be positive");
  if (workers < 1) throw ValidationError("dataset.workers must be >= 1");
  coding.validate();
  optics.validate();
}

DatasetConfig DatasetConfig::from_config(const Config& cfg) {
  DatasetConfig dc;
  dc.sequence_lengths = cfg.get_ints("dataset.sequence_lengths", dc.sequence_lengths);
  dc.noise_sigmas = cfg.get_doubles("dataset.noise_sigmas", dc.noise_sigmas);
  dc.stride = cfg.get_int("dataset.stride", dc.stride);
  const auto split = cfg.get_doubles("dataset.split", {dc.split.train, dc.split.val, dc.split.test});
  if (split.size() != 3) throw ConfigError("dataset.split needs three fractions");
  dc.split = {split[0], split[1], split[2]};
  dc.seed = cfg.get_u64("dataset.seed", cfg.get_u64("seed", dc.seed));
  dc.gamma = cfg.get_double("dataset.gamma", dc.gamma);
  dc.workers = cfg.get_int("dataset.workers", dc.workers);
  dc.coding = settings::coding_from(cfg);
  dc.optics = settings::optics_from(cfg);
  try {
    dc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return dc;
}

Config DatasetConfig::to_config() const {
  Config cfg;
  std::string lens = "[";
  for (std::size_t i = 0; i < sequence_lengths.size(); ++i) lens += (i ? ", " : "") + std::to_string(sequence_lengths[i]);
  cfg.set("dataset.sequence_lengths", lens + "]");
  std::string sig = "[";
  for (std::size_t i = 0; i < noise_sigmas.size(); ++i) sig += (i ? ", " : "") + settings::yaml_number(noise_sigmas[i]);
  cfg.set("dataset.noise_sigmas", sig + "]");
  cfg.set("dataset.stride", std::to_string(stride));
  cfg.set("dataset.split", "[" + settings::yaml_number(split.train) + ", " + settings::yaml_number(split.val) + ", " +
                               settings::yaml_number(split.test) + "]");
  cfg.set("dataset.seed", std::to_string(seed));
  cfg.set("dataset.gamma", settings::yaml_number(gamma));
  cfg.set("dataset.workers", std::to_string(workers));
  settings::store(cfg, coding);
  settings::store(cfg, optics);
  return cfg;
}

void Manifest::write_jsonl(const fs::path& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& r : records) {
    json j;
    j["pair_id"] = r.pair_id;
    j["source_video"] = r.source_video;
    j["first_frame_index"] = r.first_frame_index;
    j["sequence_length"] = r.sequence_length;
    j["sigma"] = r.sigma;
    j["split"] = to_string(r.split);
    j["blurred_path"] = r.blurred_path;
    j["sharp_path"] = r.sharp_path;
    j["coding_fingerprint"] = r.coding_fingerprint;
    j["seed"] = r.seed;
    os << j.dump() << '\n';
  }
}

Manifest Manifest::read_jsonl(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read manifest " + path.string());
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestRecord r;
      r.pair_id = j.at("pair_id").get<std::string>();
      r.source_video = j.at("source_video").get<std::string>();
      r.first_frame_index = j.at("first_frame_index").get<int>();
      r.sequence_length = j.at("sequence_length").get<int>();
      r.sigma = j.at("sigma").get<double>();
      r.split = parse_split(j.at("split").get<std::string>());
      r.blurred_path = j.at("blurred_path").get<std::string>();
      r.sharp_path = j.at("sharp_path").get<std::string>();
      r.coding_fingerprint = j.at("coding_fingerprint").get<std::string>();
      r.seed = j.value("seed", std::uint64_t{0});
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

std::vector<fs::path> list_frames(const fs::path& video_dir) {
  std::vector<fs::path> frames;
  for (const auto& entry : fs::directory_iterator(video_dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return frames;
}

std::vector<std::string> list_videos(const fs::path& frame_root) {
  if (!fs::is_directory(frame_root)) throw DataError("frame root is not a directory: " + frame_root.string());
  std::vector<std::string> videos;
  for (const auto& entry : fs::directory_iterator(frame_root))
    if (entry.is_directory()) videos.push_back(entry.path().filename().string());
  std::sort(videos.begin(), videos.end());
  return videos;
}

std::map<std::string, Split> assign_splits(std::vector<std::string> videos, const SplitFractions& fractions,
                                           std::uint64_t seed) {
  std::sort(videos.begin(), videos.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = videos.size(); i > 1; --i) std::swap(videos[i - 1], videos[rng() % i]);
  const std::size_t n = videos.size();
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions.train * n)));
  const auto n_val = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions.val * n)));
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < n; ++i)
    out[videos[i]] = i < n_train ? Split::Train : i < n_train + n_val ? Split::Val : Split::Test;
  return out;
}

std::size_t window_count(int n_frames, int length, int stride) {
  if (length < 1 || stride < 1) throw ValidationError("window length and stride must be positive");
  if (n_frames < length) return 0;
  return static_cast<std::size_t>((n_frames - length) / stride + 1);
}

std::string make_pair_id(const std::string& video, int first, int length, double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d", first);
  return video + "_" + buf + "_L" + std::to_string(length) + "_s" + metrics::format_number(sigma);
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t pair_seed(std::uint64_t seed, const std::string& video, int first, int length, double sigma) {
  return fnv1a(std::to_string(seed) + "|" + make_pair_id(video, first, length, sigma));
}

std::string coding_hash(const temporal::CameraCoding& coding, const imaging::OpticalSystem& optics) {
  Config cfg;
  settings::store(cfg, optics);
  return hex(fnv1a(coding.fingerprint() + "|" + cfg.dump()));
}

namespace {

struct Window {
  std::string video;
  int first = 0;
  int length = 0;
};

imaging::FrameSequence load_window(const std::vector<fs::path>& frames, int first, int length) {
  imaging::FrameSequence seq;
  for (int k = 0; k < length; ++k) {
    const auto& path = frames[static_cast<std::size_t>(first + k)];
    try {
      seq.frames.push_back(io::read_png(path));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  seq.validate();
  return seq;
}

fs::path blur_rel(const ManifestRecord& r) { return fs::path(to_string(r.split)) / "blur" / (r.pair_id + ".png"); }
fs::path sharp_rel(const ManifestRecord& r) { return fs::path(to_string(r.split)) / "sharp" / (r.pair_id + ".png"); }

fs::path with_ext(const fs::path& p, const char* ext) {
  fs::path out = p;
  out.replace_extension(ext);
  return out;
}

}  // namespace

BuildReport build_dataset(const fs::path& frame_root, const DatasetConfig& config, const fs::path& out_root) {
  config.validate();
  const auto videos = list_videos(frame_root);
  const auto splits = assign_splits(videos, config.split, config.seed);
  const auto fingerprint = coding_hash(config.coding, config.optics);

  BuildReport report;
  std::map<std::string, std::vector<fs::path>> frames;
  std::vector<Window> windows;
  for (const auto& v : videos) {
    frames[v] = list_frames(frame_root / v);
    const int n = static_cast<int>(frames[v].size());
    for (int len : config.sequence_lengths) {
      const int stride = config.stride_for(len);
      const auto count = window_count(n, len, stride);
      if (count == 0) ++report.skipped_windows;
      for (std::size_t w = 0; w < count; ++w) windows.push_back({v, static_cast<int>(w) * stride, len});
    }
  }

  for (const char* s : {"train", "val", "test"})
    for (const char* kind : {"blur", "sharp"}) fs::create_directories(out_root / s / kind);

  imaging::PsfCache cache;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < windows.size(); i = next++) {
      const auto& win = windows[i];
      std::vector<ManifestRecord> done;
      try {
        const auto seq = load_window(frames.at(win.video), win.first, win.length);
        for (double sigma : config.noise_sigmas) {
          ManifestRecord r;
          r.pair_id = make_pair_id(win.video, win.first, win.length, sigma);
          r.source_video = win.video;
          r.first_frame_index = win.first;
          r.sequence_length = win.length;
          r.sigma = sigma;
          r.split = splits.at(win.video);
          r.blurred_path = blur_rel(r).generic_string();
          r.sharp_path = sharp_rel(r).generic_string();
          r.coding_fingerprint = fingerprint;
          r.seed = pair_seed(config.seed, win.video, win.first, win.length, sigma);
          const auto res =
              imaging::code_exposure(seq, config.coding, config.optics, config.gamma, sigma, r.seed, &cache);
          io::write_png(out_root / r.blurred_path, res.coded.pixels);
          io::write_png(out_root / r.sharp_path, res.sharp_mid);
          io::write_pfm(with_ext(out_root / r.blurred_path, ".pfm"), res.coded.pixels);
          io::write_pfm(with_ext(out_root / r.sharp_path, ".pfm"), res.sharp_mid);
          done.push_back(std::move(r));
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        report.errors.push_back(make_pair_id(win.video, win.first, win.length, 0) + ": " + e.what());
        continue;
      }
      std::lock_guard lock(mu);
      for (auto& r : done) report.manifest.records.push_back(std::move(r));
    }
  };
  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(windows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto& recs = report.manifest.records;
  std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; });
  std::sort(report.errors.begin(), report.errors.end());
  report.manifest.write_jsonl(out_root / "manifest.jsonl");

  Config provenance = config.to_config();
  provenance.set("dataset.frame_root", "'" + fs::absolute(frame_root).generic_string() + "'");
  std::ofstream(out_root / "dataset.yaml") << provenance.dump();
  return report;
}

VerifyReport verify_manifest(const fs::path& manifest_path) {
  VerifyReport report;
  const auto manifest = Manifest::read_jsonl(manifest_path);
  const fs::path root = manifest_path.parent_path();

  std::set<std::string> ids;
  std::map<std::string, std::set<std::string>> video_splits;
  std::set<std::string> incomplete;
  for (const auto& r : manifest.records) {
    if (!ids.insert(r.pair_id).second) report.violations.push_back("duplicate pair_id " + r.pair_id);
    video_splits[r.source_video].insert(to_string(r.split));
    bool all_present = true;
    for (const auto& p : {fs::path(r.blurred_path), fs::path(r.sharp_path), with_ext(r.blurred_path, ".pfm"),
                          with_ext(r.sharp_path, ".pfm")}) {
      if (!fs::exists(root / p)) {
        report.violations.push_back("missing file " + p.generic_string());
        ++report.missing_files;
        all_present = false;
      }
    }
    if (!all_present) {
      incomplete.insert(r.pair_id);
      continue;
    }
    try {
      const auto blur = io::read_png(root / r.blurred_path);
      const auto sharp = io::read_png(root / r.sharp_path);
      if (!blur.same_shape(sharp))
        report.violations.push_back("dimension mismatch in " + r.pair_id + ": blur " + std::to_string(blur.width()) +
                                    "x" + std::to_string(blur.height()) + ", sharp " + std::to_string(sharp.width()) +
                                    "x" + std::to_string(sharp.height()));
    } catch (const std::exception& e) {
      report.violations.push_back("unreadable pair " + r.pair_id + ": " + e.what());
      incomplete.insert(r.pair_id);
    }
  }
  for (const auto& [video, s] : video_splits)
    if (s.size() > 1) report.violations.push_back("video " + video + " appears in several splits");

  if (manifest.records.empty()) return report;
  const fs::path cfg_path = root / "dataset.yaml";
  if (!fs::exists(cfg_path)) {
    report.violations.push_back("missing file dataset.yaml");
    ++report.missing_files;
    return report;
  }
  const Config cfg = Config::load(cfg_path);
  const auto config = DatasetConfig::from_config(cfg);
  const fs::path frame_root = cfg.get_string("dataset.frame_root", "");
  const auto expected_hash = coding_hash(config.coding, config.optics);

  const std::size_t n = manifest.records.size();
  const std::size_t sample = std::max<std::size_t>(1, (n + 99) / 100);
  const std::size_t step = std::max<std::size_t>(1, n / sample);
  imaging::PsfCache cache;
  for (std::size_t i = 0; i < n && report.regenerated < sample; i += step) {
    const auto& r = manifest.records[i];
    if (incomplete.count(r.pair_id)) continue;
    if (r.coding_fingerprint != expected_hash) {
      report.violations.push_back("coding fingerprint of " + r.pair_id + " does not match dataset.yaml");
      continue;
    }
    try {
      const auto frames = list_frames(frame_root / r.source_video);
      if (r.first_frame_index + r.sequence_length > static_cast<int>(frames.size()))
        throw DataError("source video is shorter than the window");
      const auto seq = load_window(frames, r.first_frame_index, r.sequence_length);
      const auto res = imaging::code_exposure(seq, config.coding, config.optics, config.gamma, r.sigma, r.seed, &cache);
      const auto stored_png = io::read_png(root / r.blurred_path);
      const auto stored_pfm = io::read_pfm_rgb(with_ext(root / r.blurred_path, ".pfm"));
      bool same = stored_png.same_shape(res.coded.pixels) && stored_pfm.same_shape(res.coded.pixels);
      for (int c = 0; c < 3 && same; ++c) {
        auto fresh = res.coded.pixels[c].pixels();
        auto png = stored_png[c].pixels();
        auto pfm = stored_pfm[c].pixels();
        for (std::size_t k = 0; k < fresh.size() && same; ++k)
          same = std::lround(fresh[k] * 255.0) == std::lround(png[k] * 255.0) &&
                 static_cast<float>(fresh[k]) == static_cast<float>(pfm[k]);
      }
      if (!same) report.violations.push_back("regenerated pair " + r.pair_id + " differs from the stored files");
      ++report.regenerated;
    } catch (const std::exception& e) {
      report.violations.push_back("cannot regenerate " + r.pair_id + ": " + e.what());
    }
  }
  return report;
}

}  // namespace chromacode::dataset
