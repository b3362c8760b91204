#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "chromacode/image.hpp"

namespace chromacode::metrics {

/// 10 log10(1 / MSE) over all samples; +inf for identical images.
double psnr(const Image& a, const Image& b);
double psnr(const RgbImage& a, const RgbImage& b);

/// Mean local SSIM over the valid region of an 11x11 Gaussian window
/// (sigma 1.5, K1 0.01, K2 0.03, range 1). RGB inputs are compared on luma.
double ssim(const Image& a, const Image& b);
double ssim(const RgbImage& a, const RgbImage& b);

struct EvalRow {
  int seq_len = 0;
  double sigma = 0;
  double psnr = 0;
  double ssim = 0;
  int count = 0;
};

class EvalReport {
 public:
  void add(int seq_len, double sigma, double psnr_db, double ssim_value);

  const std::vector<EvalRow>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  /// Mean over scenes per (seq_len, sigma), sorted by both.
  std::vector<EvalRow> grouped() const;
  /// Per length, the mean of the per-sigma means (sigma field is NaN).
  std::vector<EvalRow> by_length() const;

  /// `seq_len,sigma,psnr,ssim` for the grouped rows; infinite PSNR is "inf".
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
  std::string summary_json() const;

 private:
  std::vector<EvalRow> samples_;
};

/// Number formatting shared by the CSV writers: shortest round-trip decimal,
/// "inf" / "-inf" / "nan" for non-finite values.
std::string format_number(double v);

}  // namespace chromacode::metrics
