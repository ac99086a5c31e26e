#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csparts {

/// H x W x C color values in [0,1], row-major, channel-last.
class Image {
public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f);
  Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float at(std::size_t y, std::size_t x, std::size_t c) const { return data_[(y * width_ + x) * channels_ + c]; }
  float& at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * width_ + x) * channels_ + c]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  /// Copy of the inclusive region [x0,x1] x [y0,y1].
  Image crop(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) const;

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

/// Dense rows x cols float grid, row-major.
class Grid2D {
public:
  Grid2D() = default;
  Grid2D(std::size_t rows, std::size_t cols, float fill = 0.0f) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2D(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Bilinear resize with corner-aligned sampling; each axis scales independently.
Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);

}  // namespace csparts
