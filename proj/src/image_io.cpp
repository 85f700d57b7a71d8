#include "depthedge/image_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>

namespace depthedge {

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, ByteView bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// libpng glue. Errors unwind with longjmp, so the setjmp frames below hold only
// trivially destructible locals; all owning storage lives in the caller.

namespace {

struct PngIo {
  ByteView input;
  std::size_t pos = 0;
  Bytes* output = nullptr;
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* io = static_cast<PngIo*>(png_get_error_ptr(png));
  std::snprintf(io->message, sizeof(io->message), "%s", msg);
  longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void on_png_read(png_structp png, png_bytep out, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  if (io->pos + n > io->input.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, io->input.data() + io->pos, n);
  io->pos += n;
}

void on_png_write(png_structp png, png_bytep data, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  io->output->insert(io->output->end(), data, data + n);
}

void on_png_flush(png_structp) {}

struct DecodedHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  int out_bit_depth = 0;
  std::size_t rowbytes = 0;
};

bool decode_impl(PngIo* io, DecodedHeader* hdr, Bytes* pixels, std::vector<png_bytep>* rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, io, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, io, on_png_read);
  png_read_info(png, info);
  hdr->width = png_get_image_width(png, info);
  hdr->height = png_get_image_height(png, info);
  hdr->bit_depth = png_get_bit_depth(png, info);
  hdr->color_type = png_get_color_type(png, info);
  if (hdr->color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (hdr->color_type == PNG_COLOR_TYPE_GRAY && hdr->bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  hdr->channels = png_get_channels(png, info);
  hdr->out_bit_depth = png_get_bit_depth(png, info);
  hdr->rowbytes = png_get_rowbytes(png, info);
  pixels->resize(hdr->rowbytes * hdr->height);
  rows->resize(hdr->height);
  for (png_uint_32 r = 0; r < hdr->height; ++r) (*rows)[r] = pixels->data() + r * hdr->rowbytes;
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_impl(PngIo* io, const RawPng* img, std::vector<png_bytep>* rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, io, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, io, on_png_write, on_png_flush);
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  const int color_type = img->channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_GRAY_ALPHA;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img->width), static_cast<png_uint_32>(img->height),
               img->bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

RawPng decode_png(ByteView bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw FormatError("PNG: missing PNG signature");
  }
  PngIo io;
  io.input = bytes;
  DecodedHeader hdr;
  Bytes pixels;
  std::vector<png_bytep> rows;
  if (!decode_impl(&io, &hdr, &pixels, &rows)) {
    throw FormatError(std::string("PNG: malformed stream: ") + io.message);
  }
  RawPng out;
  out.height = static_cast<int>(hdr.height);
  out.width = static_cast<int>(hdr.width);
  out.channels = hdr.channels;
  out.bit_depth = hdr.bit_depth;
  const std::size_t n = static_cast<std::size_t>(out.height) * out.width * out.channels;
  out.samples.resize(n);
  if (hdr.out_bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<std::uint16_t>((pixels[2 * i] << 8) | pixels[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = pixels[i];
  }
  out.palette = hdr.color_type == PNG_COLOR_TYPE_PALETTE;
  return out;
}

Bytes encode_png(const RawPng& img) {
  if (img.channels != 1 && img.channels != 2) throw std::invalid_argument("encode_png: channels must be 1 or 2");
  if (img.bit_depth != 8 && img.bit_depth != 16) throw std::invalid_argument("encode_png: bit depth must be 8 or 16");
  const std::size_t per_row = static_cast<std::size_t>(img.width) * img.channels;
  const std::size_t bytes_per_sample = img.bit_depth / 8;
  Bytes pixels(per_row * bytes_per_sample * img.height);
  for (std::size_t i = 0; i < per_row * img.height; ++i) {
    if (bytes_per_sample == 2) {
      pixels[2 * i] = static_cast<std::uint8_t>(img.samples[i] >> 8);
      pixels[2 * i + 1] = static_cast<std::uint8_t>(img.samples[i] & 0xff);
    } else {
      pixels[i] = static_cast<std::uint8_t>(img.samples[i]);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = pixels.data() + r * per_row * bytes_per_sample;
  Bytes out;
  PngIo io;
  io.output = &out;
  if (!encode_impl(&io, &img, &rows)) throw std::runtime_error(std::string("PNG encode failed: ") + io.message);
  return out;
}

namespace {

RawPng decode_single_channel(ByteView bytes, int bit_depth, const char* what) {
  RawPng png = decode_png(bytes);
  if (png.palette || png.channels != 1) {
    throw FormatError(std::string(what) + ": expected single-channel PNG, got " +
                      (png.palette ? std::string("palette") : std::to_string(png.channels) + " channels"));
  }
  if (png.bit_depth != bit_depth) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(bit_depth) + "-bit PNG, got " +
                      std::to_string(png.bit_depth) + "-bit");
  }
  return png;
}

RawPng single_channel(int height, int width, int bit_depth) {
  RawPng png;
  png.height = height;
  png.width = width;
  png.channels = 1;
  png.bit_depth = bit_depth;
  png.samples.assign(static_cast<std::size_t>(height) * width, 0);
  return png;
}

std::uint16_t depth_to_raw(double depth) {
  const double raw = std::round(depth * 256.0);
  return static_cast<std::uint16_t>(std::clamp(raw, 1.0, 65535.0));
}

}  // namespace

DepthMap read_depth_png16(ByteView bytes) {
  const RawPng png = decode_single_channel(bytes, 16, "depth PNG16");
  ImageD values(png.height, png.width);
  Mask valid(png.height, png.width);
  for (int r = 0; r < png.height; ++r) {
    for (int c = 0; c < png.width; ++c) {
      const std::uint16_t raw = png.at(r, c, 0);
      valid(r, c) = raw != 0;
      values(r, c) = raw / 256.0;
    }
  }
  return DepthMap(std::move(values), std::move(valid));
}

Bytes write_depth_png16(const DepthMap& depth) {
  RawPng png = single_channel(depth.height(), depth.width(), 16);
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      if (depth.is_valid(r, c)) png.samples[static_cast<std::size_t>(r) * png.width + c] = depth_to_raw(depth.at(r, c));
    }
  }
  return encode_png(png);
}

SparseDepth read_sparse_png16(ByteView bytes) { return SparseDepth::from_depth_map(read_depth_png16(bytes)); }

Bytes write_sparse_png16(const SparseDepth& depth) { return write_depth_png16(depth.to_depth_map()); }

// ---------------------------------------------------------------------------
// PFM

namespace {

struct PfmHeader {
  int width = 0;
  int height = 0;
  bool little_endian = true;
  std::size_t data_offset = 0;
};

PfmHeader parse_pfm_header(ByteView bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  const std::string magic = next_token();
  if (magic == "PF") throw FormatError("PFM: color PFM (PF) is not supported, expected grayscale Pf");
  if (magic != "Pf") throw FormatError("PFM: bad magic '" + magic + "'");
  PfmHeader hdr;
  try {
    hdr.width = std::stoi(next_token());
    hdr.height = std::stoi(next_token());
    const double scale = std::stod(next_token());
    if (scale == 0.0) throw FormatError("PFM: zero scale");
    hdr.little_endian = scale < 0.0;
  } catch (const std::logic_error&) {
    throw FormatError("PFM: malformed header");
  }
  if (hdr.width < 1 || hdr.height < 1) throw FormatError("PFM: dimensions must be >= 1");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("PFM: truncated header");
  hdr.data_offset = pos + 1;
  return hdr;
}

}  // namespace

ImageF read_pfm_field(ByteView bytes) {
  const PfmHeader hdr = parse_pfm_header(bytes);
  const std::size_t n = static_cast<std::size_t>(hdr.width) * hdr.height;
  if (bytes.size() - hdr.data_offset < n * 4) {
    throw FormatError("PFM: truncated payload, expected " + std::to_string(n * 4) + " bytes, got " +
                      std::to_string(bytes.size() - hdr.data_offset));
  }
  const bool host_little = std::endian::native == std::endian::little;
  ImageF out(hdr.height, hdr.width);
  const std::uint8_t* p = bytes.data() + hdr.data_offset;
  for (int file_row = 0; file_row < hdr.height; ++file_row) {
    const int row = hdr.height - 1 - file_row;  // PFM stores bottom row first
    for (int c = 0; c < hdr.width; ++c, p += 4) {
      std::uint8_t b[4] = {p[0], p[1], p[2], p[3]};
      if (hdr.little_endian != host_little) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      float v;
      std::memcpy(&v, b, 4);
      out(row, c) = v;
    }
  }
  return out;
}

DepthMap read_pfm(ByteView bytes) { return DepthMap::from_values(read_pfm_field(bytes).cast<double>()); }

Bytes write_pfm(const ImageF& field, bool little_endian) {
  std::ostringstream header;
  header << "Pf\n" << field.cols() << " " << field.rows() << "\n" << (little_endian ? "-1.0" : "1.0") << "\n";
  const std::string h = header.str();
  Bytes out(h.begin(), h.end());
  out.reserve(out.size() + field.size() * 4);
  const bool host_little = std::endian::native == std::endian::little;
  for (long row = field.rows() - 1; row >= 0; --row) {
    for (long c = 0; c < field.cols(); ++c) {
      std::uint8_t b[4];
      const float v = field(row, c);
      std::memcpy(b, &v, 4);
      if (little_endian != host_little) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

Bytes write_pfm(const DepthMap& depth, bool little_endian) {
  const ImageF field = depth.valid().select(depth.values(), 0.0).cast<float>();
  return write_pfm(field, little_endian);
}

// ---------------------------------------------------------------------------
// Edge and probability maps

EdgeMap read_edge_png8(ByteView bytes) {
  const RawPng png = decode_single_channel(bytes, 8, "edge PNG8");
  Mask mask(png.height, png.width);
  for (int r = 0; r < png.height; ++r) {
    for (int c = 0; c < png.width; ++c) mask(r, c) = png.at(r, c, 0) >= 128;
  }
  return EdgeMap(std::move(mask));
}

Bytes write_edge_png8(const EdgeMap& edges) {
  RawPng png = single_channel(edges.height(), edges.width(), 8);
  for (int r = 0; r < edges.height(); ++r) {
    for (int c = 0; c < edges.width(); ++c) {
      if (edges.contains(r, c)) png.samples[static_cast<std::size_t>(r) * png.width + c] = 255;
    }
  }
  return encode_png(png);
}

EdgeProbMap read_prob_png16(ByteView bytes) {
  const RawPng png = decode_single_channel(bytes, 16, "probability PNG16");
  ImageD probs(png.height, png.width);
  for (int r = 0; r < png.height; ++r) {
    for (int c = 0; c < png.width; ++c) probs(r, c) = png.at(r, c, 0) / 65535.0;
  }
  return EdgeProbMap(std::move(probs));
}

Bytes write_prob_png16(const EdgeProbMap& probs) {
  RawPng png = single_channel(probs.height(), probs.width(), 16);
  for (int r = 0; r < probs.height(); ++r) {
    for (int c = 0; c < probs.width(); ++c) {
      png.samples[static_cast<std::size_t>(r) * png.width + c] =
          static_cast<std::uint16_t>(std::lround(probs.probs()(r, c) * 65535.0));
    }
  }
  return encode_png(png);
}

DepthMap read_depth_any(ByteView bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) return read_pfm(bytes);
  return read_depth_png16(bytes);
}

}  // namespace depthedge
