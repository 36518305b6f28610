#include "blurrast/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include <png.h>

namespace blurrast {
namespace {

constexpr char kMagic[4] = {'R', 'F', 'I', '1'};
constexpr double kGamma = 2.2;

static_assert(std::endian::native == std::endian::little, "RFI I/O assumes a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void write_rfi(const std::filesystem::path& path, const RfiImage& image) {
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.data.size() != n) throw InputError("RFI data size does not match its header");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, 4);
  put_u32(out, image.width);
  put_u32(out, image.height);
  put_u32(out, image.channels);
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

RfiImage read_rfi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw InputError("'" + path.string() + "' is not an RFI file");
  RfiImage img;
  img.width = get_u32(in);
  img.height = get_u32(in);
  img.channels = get_u32(in);
  if (!in) throw InputError("truncated RFI header in '" + path.string() + "'");
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  img.data.resize(n);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw InputError("truncated RFI data in '" + path.string() + "'");
  return img;
}

RfiImage to_rfi(const BlurFrame& frame) {
  RfiImage img;
  img.width = frame.width;
  img.height = frame.height;
  img.channels = 4;
  const int n = frame.num_pixels();
  img.data.resize(static_cast<std::size_t>(n) * 4);
  for (int p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) img.data[p * 4 + c] = static_cast<float>(frame.rgb[p * 3 + c]);
    img.data[p * 4 + 3] = static_cast<float>(frame.alpha[p]);
  }
  return img;
}

BlurFrame frame_from_rfi(const RfiImage& image) {
  if (image.channels != 4) throw InputError("expected a 4-channel RFI image");
  BlurFrame f;
  f.width = static_cast<int>(image.width);
  f.height = static_cast<int>(image.height);
  const int n = f.num_pixels();
  f.rgb.resize(static_cast<std::size_t>(n) * 3);
  f.alpha.resize(n);
  for (int p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) f.rgb[p * 3 + c] = image.data[p * 4 + c];
    f.alpha[p] = image.data[p * 4 + 3];
  }
  return f;
}

void write_png_rgba8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgba) {
  if (rgba.size() != static_cast<std::size_t>(width) * height * 4) throw InputError("PNG buffer size mismatch");
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw InputError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgba.data() + static_cast<std::size_t>(y) * width * 4));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const BlurFrame& frame) {
  const int n = frame.num_pixels();
  std::vector<std::uint8_t> rgba(static_cast<std::size_t>(n) * 4);
  auto q = [](double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); };
  for (int p = 0; p < n; ++p) {
    const double a = frame.alpha[p];
    for (int c = 0; c < 3; ++c) {
      const double straight = a > 0.0 ? frame.rgb[p * 3 + c] / a : 0.0;
      rgba[p * 4 + c] = q(std::pow(std::clamp(straight, 0.0, 1.0), 1.0 / kGamma));
    }
    rgba[p * 4 + 3] = q(a);
  }
  write_png_rgba8(path, frame.width, frame.height, rgba);
}

BlurFrame read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw InputError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  BlurFrame f;
  f.width = static_cast<int>(image.width);
  f.height = static_cast<int>(image.height);
  const int n = f.num_pixels();
  f.rgb.resize(static_cast<std::size_t>(n) * 3);
  f.alpha.resize(n);
  for (int p = 0; p < n; ++p) {
    const double a = buf[p * 4 + 3] / 255.0;
    f.alpha[p] = a;
    for (int c = 0; c < 3; ++c) f.rgb[p * 3 + c] = std::pow(buf[p * 4 + c] / 255.0, kGamma) * a;
  }
  return f;
}

BlurFrame load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("image '" + path.string() + "' does not exist");
  const std::string ext = path.extension().string();
  if (ext == ".rfi") return frame_from_rfi(read_rfi(path));
  if (ext == ".png") return read_png(path);
  throw InputError("unsupported image extension '" + ext + "' for '" + path.string() + "'");
}

}  // namespace blurrast
