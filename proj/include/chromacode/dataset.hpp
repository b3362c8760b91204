#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chromacode/config.hpp"
#include "chromacode/imaging.hpp"
#include "chromacode/temporal.hpp"

namespace chromacode::dataset {

namespace fs = std::filesystem;

enum class Split { Train, Val, Test };

const char* to_string(Split s);
Split parse_split(const std::string& s);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetConfig {
  std::vector<int> sequence_lengths{7, 9, 11, 13};
  std::vector<double> noise_sigmas{0, 1, 2, 3};
  int stride = 0;  ///< 0 means "equal to the window length"
  SplitFractions split;
  std::uint64_t seed = 0;
  double gamma = 2.2;
  temporal::CameraCoding coding = temporal::CameraCoding::phase_sweep();
  imaging::OpticalSystem optics;
  int workers = 1;

  void validate() const;
  int stride_for(int length) const { return stride > 0 ? stride : length; }

  /// Keys: dataset.{sequence_lengths, noise_sigmas, stride, split, seed,
  /// gamma, workers} plus the camera/mask/bands/grid keys of settings.hpp.
  static DatasetConfig from_config(const Config& cfg);
  Config to_config() const;
};

struct ManifestRecord {
  std::string pair_id;
  std::string source_video;
  int first_frame_index = 0;
  int sequence_length = 0;
  double sigma = 0;
  Split split = Split::Train;
  std::string blurred_path;  ///< relative to the dataset root
  std::string sharp_path;
  std::string coding_fingerprint;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::vector<ManifestRecord> records;

  void write_jsonl(const fs::path& path) const;
  static Manifest read_jsonl(const fs::path& path);
};

struct BuildReport {
  Manifest manifest;
  std::size_t skipped_windows = 0;
  std::vector<std::string> errors;
};

/// Frame files (.png) of one video directory in lexicographic order.
std::vector<fs::path> list_frames(const fs::path& video_dir);

/// Video directories under frame_root, sorted by name.
std::vector<std::string> list_videos(const fs::path& frame_root);

/// Seeded shuffle of the sorted video names, then the first round(train*V)
/// go to train, the next round(val*V) to val, the rest to test.
std::map<std::string, Split> assign_splits(std::vector<std::string> videos, const SplitFractions& fractions,
                                           std::uint64_t seed);

/// Windows per video: max(0, floor((n - L) / stride) + 1).
std::size_t window_count(int n_frames, int length, int stride);

/// pair ids look like "{video}_{first:06d}_L{len}_s{sigma}".
std::string make_pair_id(const std::string& video, int first, int length, double sigma);

/// Per-pair noise seed derived from the dataset seed and the pair identity.
std::uint64_t pair_seed(std::uint64_t seed, const std::string& video, int first, int length, double sigma);

/// Stable 64-bit hash of the coding and optics, as 16 hex digits.
std::string coding_hash(const temporal::CameraCoding& coding, const imaging::OpticalSystem& optics);

/// Writes out_root/{split}/{blur,sharp}/{pair_id}.{png,pfm}, manifest.jsonl
/// and dataset.yaml (the resolved configuration plus frame_root).
BuildReport build_dataset(const fs::path& frame_root, const DatasetConfig& config, const fs::path& out_root);

struct VerifyReport {
  std::vector<std::string> violations;
  std::size_t missing_files = 0;
  std::size_t regenerated = 0;

  bool ok() const { return violations.empty(); }
};

/// Checks files, dimensions, split integrity, id uniqueness, and rebuilds 1%
/// of the pairs (at least one) from their sources for a bit-exact comparison.
VerifyReport verify_manifest(const fs::path& manifest_path);

}  // namespace chromacode::dataset
