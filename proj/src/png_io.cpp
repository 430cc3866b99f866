#include "styler/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace styler {

namespace {

Image from_buffer(const std::vector<std::uint8_t>& buf, int w, int h, int channels) {
  std::vector<Plane> planes(channels, Plane(h, w));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        planes[c](y, x) = buf[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
  return Image(std::move(planes));
}

std::vector<std::uint8_t> to_buffer(const Image& img) {
  const int w = img.width(), h = img.height(), channels = img.channels();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img(x, y, c), 0.0, 1.0);
        buf[(static_cast<std::size_t>(y) * w + x) * channels + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  return buf;
}

Image finish_read(png_image& image) {
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG decode failed: " + msg);
  }
  return from_buffer(buf, static_cast<int>(image.width), static_cast<int>(image.height), channels);
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("not a readable PNG: ") + image.message);
  return finish_read(image);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw InvalidInput("cannot encode an empty image");
  auto buf = to_buffer(img);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buf.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buf.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Image quantize8(const Image& img) {
  Image out = img;
  for (auto& p : out.planes()) p = ((p.max(0.0).min(1.0) * 255.0).round()) / 255.0;
  return out;
}

}  // namespace styler
