#include "chromacode/image.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace chromacode {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image dimension");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

double Image::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Image::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Image::min() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

Image& Image::operator+=(const Image& other) {
  if (!same_shape(other)) throw std::invalid_argument("image shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Image& Image::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::R: return "R";
    case Channel::G: return "G";
    case Channel::B: return "B";
  }
  return "?";
}

RgbImage::RgbImage(int width, int height, double fill)
    : planes{Image(width, height, fill), Image(width, height, fill), Image(width, height, fill)} {}

RgbImage& RgbImage::operator+=(const RgbImage& other) {
  for (int c = 0; c < 3; ++c) planes[c] += other.planes[c];
  return *this;
}

RgbImage& RgbImage::operator*=(double s) {
  for (auto& p : planes) p *= s;
  return *this;
}

Image luma(const RgbImage& img) {
  Image y(img.width(), img.height());
  auto r = img[Channel::R].pixels();
  auto g = img[Channel::G].pixels();
  auto b = img[Channel::B].pixels();
  auto out = y.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return y;
}

void clamp_inplace(Image& img, double lo, double hi) {
  for (double& v : img.pixels()) v = std::clamp(v, lo, hi);
}

void clamp_inplace(RgbImage& img, double lo, double hi) {
  for (auto& p : img.planes) clamp_inplace(p, lo, hi);
}

}  // namespace chromacode
