#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "csparts/errors.hpp"
#include "csparts/grid.hpp"
#include "csparts/image_io.hpp"

namespace csparts {

Image::Image(std::size_t height, std::size_t width, std::size_t channels, float fill)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {
  if (height == 0 || width == 0) throw ArgumentError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ArgumentError("image channels must be 1 or 3");
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height == 0 || width == 0) throw ArgumentError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ArgumentError("image channels must be 1 or 3");
  if (data_.size() != height * width * channels) throw ArgumentError("image data length does not match dimensions");
  for (float v : data_)
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw ArgumentError("image values must be finite and in [0,1]");
}

Image Image::crop(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) const {
  if (x0 > x1 || y0 > y1 || x1 >= width_ || y1 >= height_) throw ArgumentError("crop region outside image");
  const std::size_t h = y1 - y0 + 1, w = x1 - x0 + 1;
  Image out(h, w, channels_);
  for (std::size_t y = 0; y < h; ++y) {
    auto src = data_.begin() + static_cast<std::ptrdiff_t>(((y0 + y) * width_ + x0) * channels_);
    std::copy_n(src, w * channels_, out.data_.begin() + static_cast<std::ptrdiff_t>(y * w * channels_));
  }
  return out;
}

Grid2D::Grid2D(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ArgumentError("grid data length does not match dimensions");
}

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw ArgumentError("resize target must be at least 1x1");
  if (out_h == img.height() && out_w == img.width()) return img;

  const std::size_t c = img.channels();
  // Corner-aligned: output index i samples source position i * (in-1)/(out-1).
  auto axis = [](std::size_t in, std::size_t out, std::size_t i, std::size_t& lo, std::size_t& hi, double& t) {
    if (out == 1 || in == 1) {
      lo = hi = 0;
      t = 0.0;
      return;
    }
    const double pos = static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    lo = std::min(static_cast<std::size_t>(pos), in - 1);
    hi = std::min(lo + 1, in - 1);
    t = pos - static_cast<double>(lo);
  };

  std::vector<float> out(out_h * out_w * c);
  for (std::size_t y = 0; y < out_h; ++y) {
    std::size_t y0, y1;
    double ty;
    axis(img.height(), out_h, y, y0, y1, ty);
    for (std::size_t x = 0; x < out_w; ++x) {
      std::size_t x0, x1;
      double tx;
      axis(img.width(), out_w, x, x0, x1, tx);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1.0 - tx) * img.at(y0, x0, ch) + tx * img.at(y0, x1, ch);
        const double bot = (1.0 - tx) * img.at(y1, x0, ch) + tx * img.at(y1, x1, ch);
        const double v = (1.0 - ty) * top + ty * bot;
        out[(y * out_w + x) * c + ch] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
      }
    }
  }
  return Image(out_h, out_w, c, std::move(out));
}

namespace {

class HeaderReader {
public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  std::size_t number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw FormatError(std::string("malformed header field '") + field + "'");
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1u << 24)) throw FormatError(std::string("header field '") + field + "' out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space(const char* field) {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError(std::string("missing whitespace after header field '") + field + "'");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void write_bytes(const std::filesystem::path& path, const std::string& header, const std::vector<std::uint8_t>& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("bad header field 'magic' in '" + path.string() + "' (expected P5 or P6)");
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;

  HeaderReader hdr(bytes);
  hdr.advance(2);
  const std::size_t width = hdr.number("width");
  const std::size_t height = hdr.number("height");
  const std::size_t maxval = hdr.number("maxval");
  if (width == 0) throw FormatError("header field 'width' must be positive");
  if (height == 0) throw FormatError("header field 'height' must be positive");
  if (maxval != 255) throw FormatError("header field 'maxval' is " + std::to_string(maxval) + ", expected 255");
  hdr.single_space("maxval");

  const std::size_t n = width * height * channels;
  if (bytes.size() - hdr.pos() < n) throw FormatError("truncated pixel data in '" + path.string() + "'");

  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(bytes[hdr.pos() + i]) / 255.0f;
  return Image(height, width, channels, std::move(data));
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string header = std::string(img.channels() == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width()) +
                             " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> raster(img.size());
  std::transform(img.data().begin(), img.data().end(), raster.begin(), quantize);
  write_bytes(path, header, raster);
}

void write_pgm(const std::filesystem::path& path, const Grid2D& grid) {
  if (grid.size() == 0) throw ArgumentError("cannot write an empty grid");
  const std::string header = "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n255\n";
  std::vector<std::uint8_t> raster(grid.size());
  std::transform(grid.data().begin(), grid.data().end(), raster.begin(), quantize);
  write_bytes(path, header, raster);
}

}  // namespace csparts
