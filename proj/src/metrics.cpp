#include "chromacode/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "json.hpp"

#include "chromacode/errors.hpp"

namespace chromacode::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

void require_same(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DomainError("images differ in size");
  if (a.empty()) throw DomainError("empty image");
}

std::vector<double> gaussian_taps() {
  std::vector<double> g(kWindow);
  double total = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid-mode filtering with the Gaussian window.
Image filter_valid(const Image& img, const std::vector<double>& g) {
  const int w = img.width() - kWindow + 1;
  const int h = img.height() - kWindow + 1;
  Image tmp(w, img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * img(x + k, y);
      tmp(x, y) = s;
    }
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * tmp(x, y + k);
      out(x, y) = s;
    }
  return out;
}

Image product(const Image& a, const Image& b) {
  Image out(a.width(), a.height());
  auto o = out.pixels();
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = pa[i] * pb[i];
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same(a, b);
  double se = 0;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) se += (pa[i] - pb[i]) * (pa[i] - pb[i]);
  if (se == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(pa.size()) / se);
}

double psnr(const RgbImage& a, const RgbImage& b) {
  for (int c = 0; c < 3; ++c) require_same(a[c], b[c]);
  double se = 0;
  std::size_t n = 0;
  for (int c = 0; c < 3; ++c) {
    auto pa = a[c].pixels();
    auto pb = b[c].pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) se += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    n += pa.size();
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(n) / se);
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b);
  if (a.width() < kWindow || a.height() < kWindow) throw DomainError("image smaller than the 11x11 SSIM window");
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto g = gaussian_taps();
  const Image mu_a = filter_valid(a, g);
  const Image mu_b = filter_valid(b, g);
  const Image aa = filter_valid(product(a, a), g);
  const Image bb = filter_valid(product(b, b), g);
  const Image ab = filter_valid(product(a, b), g);
  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.pixels()[i], mb = mu_b.pixels()[i];
    const double va = aa.pixels()[i] - ma * ma;
    const double vb = bb.pixels()[i] - mb * mb;
    const double cov = ab.pixels()[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const RgbImage& a, const RgbImage& b) { return ssim(luma(a), luma(b)); }

void EvalReport::add(int seq_len, double sigma, double psnr_db, double ssim_value) {
  samples_.push_back({seq_len, sigma, psnr_db, ssim_value, 1});
}

std::vector<EvalRow> EvalReport::grouped() const {
  std::map<std::pair<int, double>, EvalRow> groups;
  for (const auto& s : samples_) {
    auto& g = groups[{s.seq_len, s.sigma}];
    g.seq_len = s.seq_len;
    g.sigma = s.sigma;
    g.psnr += s.psnr;
    g.ssim += s.ssim;
    g.count += 1;
  }
  std::vector<EvalRow> rows;
  for (auto& [key, g] : groups) {
    g.psnr /= g.count;
    g.ssim /= g.count;
    rows.push_back(g);
  }
  return rows;
}

std::vector<EvalRow> EvalReport::by_length() const {
  std::map<int, EvalRow> lengths;
  std::map<int, int> cells;
  for (const auto& g : grouped()) {
    auto& row = lengths[g.seq_len];
    row.seq_len = g.seq_len;
    row.psnr += g.psnr;
    row.ssim += g.ssim;
    row.count += g.count;
    cells[g.seq_len] += 1;
  }
  std::vector<EvalRow> rows;
  for (auto& [len, row] : lengths) {
    row.sigma = std::numeric_limits<double>::quiet_NaN();
    row.psnr /= cells[len];
    row.ssim /= cells[len];
    rows.push_back(row);
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void EvalReport::write_csv(std::ostream& os) const {
  os << "seq_len,sigma,psnr,ssim\n";
  for (const auto& r : grouped())
    os << r.seq_len << ',' << format_number(r.sigma) << ',' << format_number(r.psnr) << ','
       << format_number(r.ssim) << '\n';
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  write_csv(os);
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

std::string EvalReport::summary_json() const {
  nlohmann::json j;
  j["groups"] = nlohmann::json::array();
  for (const auto& r : grouped())
    j["groups"].push_back(
        {{"seq_len", r.seq_len}, {"sigma", r.sigma}, {"psnr", number(r.psnr)}, {"ssim", r.ssim}, {"count", r.count}});
  j["by_length"] = nlohmann::json::array();
  for (const auto& r : by_length())
    j["by_length"].push_back({{"seq_len", r.seq_len}, {"psnr", number(r.psnr)}, {"ssim", r.ssim}, {"count", r.count}});
  j["samples"] = samples_.size();
  return j.dump(2);
}

}  // namespace chromacode::metrics
