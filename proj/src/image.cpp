#include "adcp/image.hpp"

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace adcp {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
  static constexpr std::array<std::uint8_t, 8> kSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  return bytes.size() >= kSig.size() && std::equal(kSig.begin(), kSig.end(), bytes.begin());
}

bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

[[noreturn]] void jpeg_jump(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Only trivially destructible locals live in this frame, so longjmp out of
// libjpeg is safe; the output buffer belongs to the caller.
bool decode_jpeg_into(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& data,
                      int& width, int& height, char (&message)[JMSG_LENGTH_MAX]) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_jump;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::copy(std::begin(err.message), std::end(err.message), message);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const auto row_bytes = static_cast<std::size_t>(cinfo.output_width) * 3;
  data.resize(row_bytes * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = data.data() + static_cast<std::size_t>(cinfo.output_scanline) * row_bytes;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> data;
  int width = 0;
  int height = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!decode_jpeg_into(bytes, data, width, height, message)) {
    throw ImageIoError(std::string("jpeg: ") + message);
  }
  return Image(width, height, std::move(data));
}

}  // namespace

Image::Image(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image: dimensions must be positive");
  data_.assign(pixel_count() * 3, fill);
}

Image::Image(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image: dimensions must be positive");
  if (data_.size() != pixel_count() * 3) {
    throw std::invalid_argument("image: buffer holds " + std::to_string(data_.size()) +
                                " bytes, expected " + std::to_string(pixel_count() * 3));
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw ImageIoError("png: empty image");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.data().data(), 0, nullptr)) {
    throw ImageIoError(std::string("png: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.data().data(), 0, nullptr)) {
    throw ImageIoError(std::string("png: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("png: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, data.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ImageIoError(std::string("png: ") + png.message);
  }
  return Image(static_cast<int>(png.width), static_cast<int>(png.height), std::move(data));
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (has_png_signature(bytes)) return decode_png(bytes);
  if (has_jpeg_signature(bytes)) return decode_jpeg(bytes);
  throw ImageIoError("'" + path.string() + "' is neither PNG nor JPEG");
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("short write to '" + path.string() + "'");
}

}  // namespace adcp
