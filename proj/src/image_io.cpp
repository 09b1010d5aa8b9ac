#include "marginalia/image_io.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "marginalia/errors.hpp"

namespace marginalia {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw InputError("cannot open '" + path.string() + "'");
  return f;
}

// libpng reports errors by longjmp; the message is parked in the error
// pointer and rethrown as InputError once control is back in C++.
void png_fail(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

Raster read_png(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  std::string error;
  std::vector<png_byte> buf;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int channels = 1;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
  } guard{png, info};
  if (setjmp(png_jmpbuf(png))) throw InputError("png: " + error + " in '" + path.string() + "'");

  png_init_io(png, f.get());
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);

  buf.resize(static_cast<std::size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = buf.data() + static_cast<std::size_t>(r) * w * channels;
  png_read_image(png, rows.data());

  Raster out(h, w);
  for (png_uint_32 r = 0; r < h; ++r) {
    for (png_uint_32 c = 0; c < w; ++c) {
      const png_byte* px = rows[r] + static_cast<std::size_t>(c) * channels;
      out(r, c) = channels >= 3 ? luma(px[0], px[1], px[2]) : px[0];
    }
  }
  return out;
}

int read_pnm_int(std::istream& in) {
  int v = 0;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      in.unget();
      break;
    }
  }
  if (!(in >> v)) throw InputError("pgm: bad header");
  return v;
}

Raster read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") throw InputError("pgm: unsupported magic in '" + path.string() + "'");
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw InputError("pgm: unsupported header");
  Raster out(h, w);
  if (magic == "P5") {
    in.get();
    in.read(reinterpret_cast<char*>(out.data()), out.size());
    if (in.gcount() != out.size()) throw InputError("pgm: truncated '" + path.string() + "'");
  } else {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      int v = 0;
      if (!(in >> v)) throw InputError("pgm: truncated '" + path.string() + "'");
      out.data()[i] = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out.data()[i] = static_cast<std::uint8_t>((out.data()[i] * 255 + maxval / 2) / maxval);
    }
  }
  return out;
}

void write_png_rows(const fs::path& path, int w, int h, int color_type,
                    const std::vector<png_bytep>& rows) {
  FilePtr f = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_write_struct(&p, &i); }
  } guard{png, info};
  if (setjmp(png_jmpbuf(png))) throw InputError("png: " + error + " writing '" + path.string() + "'");
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
}

}  // namespace

Raster read_image(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw InputError("cannot open image '" + path.string() + "'");
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2')) return read_pgm(path);
  throw InputError("unrecognized image format '" + path.string() + "'");
}

void write_png(const fs::path& path, const Raster& image) {
  Raster copy = image;
  std::vector<png_bytep> rows(static_cast<std::size_t>(copy.rows()));
  for (Eigen::Index r = 0; r < copy.rows(); ++r) rows[static_cast<std::size_t>(r)] = &copy(r, 0);
  write_png_rows(path, width_of(copy), height_of(copy), PNG_COLOR_TYPE_GRAY, rows);
}

void write_png(const fs::path& path, const RgbImage& image) {
  const int w = image.width();
  const int h = image.height();
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r) {
    png_byte* row = buf.data() + static_cast<std::size_t>(r) * w * 3;
    rows[static_cast<std::size_t>(r)] = row;
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < 3; ++k) row[c * 3 + k] = image.planes[static_cast<std::size_t>(k)](r, c);
    }
  }
  write_png_rows(path, w, h, PNG_COLOR_TYPE_RGB, rows);
}

void write_pgm(const fs::path& path, const Raster& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data()), image.size());
}

}  // namespace marginalia
