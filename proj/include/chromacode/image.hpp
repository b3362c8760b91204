#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace chromacode {

/// Single-channel, row-major image of doubles.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }

  double sum() const;
  double max() const;
  double min() const;

  Image& operator+=(const Image& other);
  Image& operator*=(double s);

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

enum class Channel { R = 0, G = 1, B = 2 };

inline constexpr std::array<Channel, 3> kChannels{Channel::R, Channel::G, Channel::B};

const char* channel_name(Channel c);

/// Three equally sized planes in R, G, B order.
struct RgbImage {
  std::array<Image, 3> planes;

  RgbImage() = default;
  RgbImage(int width, int height, double fill = 0.0);

  int width() const { return planes[0].width(); }
  int height() const { return planes[0].height(); }

  Image& operator[](Channel c) { return planes[static_cast<int>(c)]; }
  const Image& operator[](Channel c) const { return planes[static_cast<int>(c)]; }
  Image& operator[](int c) { return planes[c]; }
  const Image& operator[](int c) const { return planes[c]; }

  RgbImage& operator+=(const RgbImage& other);
  RgbImage& operator*=(double s);

  bool same_shape(const RgbImage& other) const { return planes[0].same_shape(other.planes[0]); }
};

/// BT.601 luma.
Image luma(const RgbImage& img);

/// Clamp every sample into [lo, hi].
void clamp_inplace(Image& img, double lo, double hi);
void clamp_inplace(RgbImage& img, double lo, double hi);

}  // namespace chromacode
