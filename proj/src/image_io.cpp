#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>

#include "snn/data.hpp"

namespace snn {

namespace {

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegError*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot open image " + path.string());

  jpeg_decompress_struct info{};
  JpegError err{};
  info.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  Image img;
  std::vector<unsigned char> row;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw std::runtime_error("cannot decode " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  img.height = info.output_height;
  img.width = info.output_width;
  img.planes.assign(3 * img.height * img.width, 0.0f);
  row.resize(std::size_t(info.output_width) * info.output_components);
  const std::size_t area = img.height * img.width;
  while (info.output_scanline < info.output_height) {
    const std::size_t r = info.output_scanline;
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&info, rows, 1);
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        img.planes[ch * area + r * img.width + c] = row[c * 3 + ch] / 255.0f;
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return img;
}

std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

Image decode_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  if (next_token(in) != "P6") throw std::runtime_error(path.string() + ": not a binary PPM");
  Image img;
  img.width = std::stoul(next_token(in));
  img.height = std::stoul(next_token(in));
  if (std::stoul(next_token(in)) != 255) {
    throw std::runtime_error(path.string() + ": only 8-bit PPM supported");
  }
  in.get();
  const std::size_t area = img.height * img.width;
  std::vector<unsigned char> raw(3 * area);
  if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()))) {
    throw std::runtime_error(path.string() + ": truncated PPM");
  }
  img.planes.resize(3 * area);
  for (std::size_t p = 0; p < area; ++p)
    for (std::size_t ch = 0; ch < 3; ++ch) img.planes[ch * area + p] = raw[p * 3 + ch] / 255.0f;
  return img;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".ppm") return decode_ppm(path);
  return decode_jpeg(path);
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  const std::size_t area = img.height * img.width;
  for (std::size_t p = 0; p < area; ++p)
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const float v = std::clamp(img.planes[ch * area + p], 0.0f, 1.0f);
      out.put(static_cast<char>(static_cast<unsigned char>(v * 255.0f + 0.5f)));
    }
}

std::vector<float> resize_bilinear(std::span<const float> src, std::size_t channels,
                                   std::size_t in_h, std::size_t in_w, std::size_t out_h,
                                   std::size_t out_w) {
  std::vector<float> out(channels * out_h * out_w);
  const double sy = double(in_h) / double(out_h);
  const double sx = double(in_w) / double(out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    const double fy = std::max(0.0, (i + 0.5) * sy - 0.5);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), in_h - 1);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - double(y0);
    for (std::size_t j = 0; j < out_w; ++j) {
      const double fx = std::max(0.0, (j + 0.5) * sx - 0.5);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), in_w - 1);
      const std::size_t x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - double(x0);
      for (std::size_t c = 0; c < channels; ++c) {
        const float* p = src.data() + c * in_h * in_w;
        const double top = p[y0 * in_w + x0] * (1.0 - wx) + p[y0 * in_w + x1] * wx;
        const double bot = p[y1 * in_w + x0] * (1.0 - wx) + p[y1 * in_w + x1] * wx;
        out[(c * out_h + i) * out_w + j] = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace snn
