#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace adcp {

/// 8-bit RGB image, row-major, channels interleaved.
class Image {
 public:
  using Pixels = Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;
  using PixelMap = Eigen::Map<Pixels>;
  using ConstPixelMap = Eigen::Map<const Pixels>;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  /// One row per pixel (y * width + x), one column per channel.
  PixelMap pixels() { return {data_.data(), static_cast<Eigen::Index>(pixel_count()), 3}; }
  ConstPixelMap pixels() const {
    return {data_.data(), static_cast<Eigen::Index>(pixel_count()), 3};
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel patch coverage in [0, 1]; rows are image rows.
using CoverageMask = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads PNG or JPEG, detected from the file signature.
Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

}  // namespace adcp
