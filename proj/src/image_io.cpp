#include "roiquant/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace roiquant {

const char* pixel_format_name(PixelFormat f) {
  switch (f) {
    case PixelFormat::Yuv444p8: return "yuv444p";
    case PixelFormat::Yuv420p8: return "yuv420p";
    case PixelFormat::Rgb24: return "rgb24";
  }
  return "?";
}

PixelFormat parse_pixel_format(const std::string& name) {
  if (name == "yuv444p" || name == "yuv444p8") return PixelFormat::Yuv444p8;
  if (name == "yuv420p" || name == "yuv420p8") return PixelFormat::Yuv420p8;
  if (name == "rgb24") return PixelFormat::Rgb24;
  throw UsageError("unknown pixel format: " + name);
}

namespace {

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) continue;
    break;
  }
  if (c == EOF) throw IoError("malformed header: unexpected end of file");
  do {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  } while (c != EOF && !std::isspace(c) && c != '#');
  if (c == '#') in.unget();
  return tok;
}

int pnm_int(std::istream& in, const char* what) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(std::string("malformed header: bad ") + what + " '" + tok + "'");
  }
}

ImageFormat format_from_extension(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ppm" || ext == ".PPM") return ImageFormat::Ppm;
  if (ext == ".pgm" || ext == ".PGM") return ImageFormat::Pgm;
  throw UsageError("cannot infer image format from extension: " + path);
}

void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path + " (" + ec.message() + ")");
}

}  // namespace

Frame load_image(const std::string& path, ImageFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);

  const std::string magic = pnm_token(in);
  const char* want = format == ImageFormat::Ppm ? "P6" : "P5";
  if (magic != want)
    throw IoError("malformed header: expected " + std::string(want) + ", got '" + magic + "' in " + path);

  const int w = pnm_int(in, "width");
  const int h = pnm_int(in, "height");
  const int maxval = pnm_int(in, "maxval");
  if (w <= 0 || h <= 0) throw IoError("malformed header: zero dimension in " + path);
  if (maxval != 255) throw IoError("unsupported maxval " + std::to_string(maxval) + " in " + path + " (must be 255)");
  // pnm_token consumed exactly the single whitespace byte after maxval.

  const std::size_t channels = format == ImageFormat::Ppm ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  std::vector<std::uint8_t> payload(need);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(need));
  if (static_cast<std::size_t>(in.gcount()) != need)
    throw IoError("truncated payload: " + path + " (expected " + std::to_string(need) +
                  " bytes, got " + std::to_string(in.gcount()) + ")");

  if (format == ImageFormat::Pgm) {
    Frame f = make_gray_frame(w, h);
    std::copy(payload.begin(), payload.end(), f.planes[0].data());
    return f;
  }

  Frame f = make_frame(w, h, Colorspace::Rgb, Subsampling::S444);
  const std::uint8_t* p = payload.data();
  for (long i = 0; i < static_cast<long>(w) * h; ++i) {
    f.planes[0].data()[i] = *p++;
    f.planes[1].data()[i] = *p++;
    f.planes[2].data()[i] = *p++;
  }
  return f;
}

Frame load_image(const std::string& path) { return load_image(path, format_from_extension(path)); }

void save_image(const Frame& frame, const std::string& path, ImageFormat format) {
  if (frame.width <= 0 || frame.height <= 0)
    throw UsageError("cannot save empty frame");
  if (format == ImageFormat::Ppm && (frame.colorspace != Colorspace::Rgb || frame.planes.size() != 3))
    throw UsageError("colorspace mismatch: PPM requires an RGB frame");
  if (format == ImageFormat::Pgm && frame.planes.size() != 1)
    throw UsageError("colorspace mismatch: PGM requires a single-plane frame");

  const int w = frame.width, h = frame.height;
  std::string out;
  char header[64];
  std::snprintf(header, sizeof header, "%s\n%d %d\n255\n", format == ImageFormat::Ppm ? "P6" : "P5", w, h);
  out = header;

  if (format == ImageFormat::Pgm) {
    out.append(reinterpret_cast<const char*>(frame.planes[0].data()),
               static_cast<std::size_t>(w) * h);
  } else {
    out.reserve(out.size() + static_cast<std::size_t>(w) * h * 3);
    for (long i = 0; i < static_cast<long>(w) * h; ++i) {
      out.push_back(static_cast<char>(frame.planes[0].data()[i]));
      out.push_back(static_cast<char>(frame.planes[1].data()[i]));
      out.push_back(static_cast<char>(frame.planes[2].data()[i]));
    }
  }
  write_file_atomic(path, out.data(), out.size());
}

void save_image(const Frame& frame, const std::string& path) {
  save_image(frame, path, format_from_extension(path));
}

std::size_t SequenceSpec::frame_bytes() const {
  const std::size_t wh = static_cast<std::size_t>(width) * height;
  switch (format) {
    case PixelFormat::Yuv444p8: return 3 * wh;
    case PixelFormat::Rgb24: return 3 * wh;
    case PixelFormat::Yuv420p8:
      return wh + 2 * static_cast<std::size_t>(chroma_extent(width)) * chroma_extent(height);
  }
  return 0;
}

SequenceSpec SequenceSpec::probe(const std::string& path, int width, int height, PixelFormat format) {
  if (width <= 0 || height <= 0) throw UsageError("sequence dimensions must be positive");
  SequenceSpec spec;
  spec.path = path;
  spec.width = width;
  spec.height = height;
  spec.format = format;
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat sequence: " + path + " (" + ec.message() + ")");
  const std::size_t fb = spec.frame_bytes();
  if (size % fb != 0)
    throw IoError("file size " + std::to_string(size) + " of " + path +
                  " is not a multiple of the frame size " + std::to_string(fb));
  spec.frame_count = static_cast<long>(size / fb);
  return spec;
}

Frame read_sequence(const SequenceSpec& spec, long index) {
  if (index < 0 || index >= spec.frame_count)
    throw UsageError("frame index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(spec.frame_count) + ")");
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw IoError("cannot open sequence: " + spec.path);
  const std::size_t fb = spec.frame_bytes();
  in.seekg(static_cast<std::streamoff>(fb) * index);
  std::vector<std::uint8_t> buf(fb);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(fb));
  if (static_cast<std::size_t>(in.gcount()) != fb)
    throw IoError("short read at frame " + std::to_string(index) + " of " + spec.path);

  const int w = spec.width, h = spec.height;
  if (spec.format == PixelFormat::Rgb24) {
    Frame f = make_frame(w, h, Colorspace::Rgb, Subsampling::S444);
    const std::uint8_t* p = buf.data();
    for (long i = 0; i < static_cast<long>(w) * h; ++i) {
      f.planes[0].data()[i] = *p++;
      f.planes[1].data()[i] = *p++;
      f.planes[2].data()[i] = *p++;
    }
    return f;
  }

  const Subsampling sub = spec.format == PixelFormat::Yuv420p8 ? Subsampling::S420 : Subsampling::S444;
  Frame f = make_frame(w, h, Colorspace::Yuv, sub);
  const std::uint8_t* p = buf.data();
  for (auto& plane : f.planes) {
    const std::size_t n = static_cast<std::size_t>(plane.rows()) * plane.cols();
    std::copy(p, p + n, plane.data());
    p += n;
  }
  return f;
}

struct SequenceWriter::Impl {
  std::string final_path;
  std::string tmp_path;
  std::ofstream out;
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::Yuv444p8;
  bool finished = false;
};

SequenceWriter::SequenceWriter(const std::string& path, int width, int height, PixelFormat format)
    : impl_(std::make_unique<Impl>()) {
  impl_->final_path = path;
  impl_->tmp_path = path + ".tmp";
  impl_->width = width;
  impl_->height = height;
  impl_->format = format;
  impl_->out.open(impl_->tmp_path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw IoError("cannot open for writing: " + impl_->tmp_path);
}

SequenceWriter::~SequenceWriter() {
  if (impl_ && !impl_->finished) {
    impl_->out.close();
    std::error_code ec;
    fs::remove(impl_->tmp_path, ec);
  }
}

void SequenceWriter::write(const Frame& frame) {
  if (frame.width != impl_->width || frame.height != impl_->height)
    throw UsageError("frame geometry does not match the sequence writer");
  auto& out = impl_->out;
  if (impl_->format == PixelFormat::Rgb24) {
    if (frame.colorspace != Colorspace::Rgb || frame.planes.size() != 3)
      throw UsageError("colorspace mismatch: rgb24 output requires an RGB frame");
    std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width) * 3);
    for (int y = 0; y < frame.height; ++y) {
      std::uint8_t* p = row.data();
      for (int x = 0; x < frame.width; ++x) {
        *p++ = frame.planes[0](y, x);
        *p++ = frame.planes[1](y, x);
        *p++ = frame.planes[2](y, x);
      }
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
  } else {
    if (frame.colorspace != Colorspace::Yuv || frame.planes.size() != 3)
      throw UsageError("colorspace mismatch: planar YUV output requires a YUV frame");
    const Subsampling want =
        impl_->format == PixelFormat::Yuv420p8 ? Subsampling::S420 : Subsampling::S444;
    if (frame.subsampling != want)
      throw UsageError("subsampling mismatch for " + std::string(pixel_format_name(impl_->format)));
    for (const auto& plane : frame.planes) {
      out.write(reinterpret_cast<const char*>(plane.data()),
                static_cast<std::streamsize>(plane.size()));
    }
  }
  if (!out) throw IoError("write failed: " + impl_->tmp_path);
}

void SequenceWriter::finish() {
  if (impl_->finished) return;
  impl_->out.close();
  if (!impl_->out && impl_->out.bad()) throw IoError("close failed: " + impl_->tmp_path);
  std::error_code ec;
  fs::rename(impl_->tmp_path, impl_->final_path, ec);
  if (ec)
    throw IoError("rename failed: " + impl_->tmp_path + " -> " + impl_->final_path + " (" +
                  ec.message() + ")");
  impl_->finished = true;
}

SequenceInput SequenceInput::open(const std::string& path, const std::optional<RawGeometry>& geometry) {
  SequenceInput in;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    in.kind_ = Kind::ImageDir;
    for (const auto& entry : fs::directory_iterator(path)) {
      const std::string ext = entry.path().extension().string();
      if (ext == ".ppm" || ext == ".pgm" || ext == ".PPM" || ext == ".PGM")
        in.files_.push_back(entry.path().string());
    }
    std::sort(in.files_.begin(), in.files_.end());
    if (in.files_.empty()) throw IoError("no PPM/PGM frames in directory: " + path);
    in.frame_count_ = static_cast<long>(in.files_.size());
    const Frame first = load_image(in.files_.front());
    in.width_ = first.width;
    in.height_ = first.height;
    return in;
  }
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ppm" || ext == ".pgm" || ext == ".PPM" || ext == ".PGM") {
    in.kind_ = Kind::SingleImage;
    in.path_ = path;
    in.frame_count_ = 1;
    const Frame f = load_image(path);
    in.width_ = f.width;
    in.height_ = f.height;
    return in;
  }
  if (!geometry)
    throw UsageError("raw input needs --size and --format: " + path);
  in.kind_ = Kind::RawFile;
  in.geometry_ = geometry;
  in.spec_ = SequenceSpec::probe(path, geometry->width, geometry->height, geometry->format);
  in.frame_count_ = in.spec_.frame_count;
  in.width_ = geometry->width;
  in.height_ = geometry->height;
  return in;
}

Frame SequenceInput::read(long index) const {
  switch (kind_) {
    case Kind::RawFile:
      return read_sequence(spec_, index);
    case Kind::SingleImage:
      if (index != 0) throw UsageError("single image has exactly one frame");
      return load_image(path_);
    case Kind::ImageDir: {
      if (index < 0 || index >= frame_count_) throw UsageError("frame index out of range");
      Frame f = load_image(files_[static_cast<std::size_t>(index)]);
      if (f.width != width_ || f.height != height_)
        throw IoError("frame geometry changes mid-directory: " + files_[static_cast<std::size_t>(index)]);
      return f;
    }
  }
  throw UsageError("unreachable");
}

SequenceOutput SequenceOutput::create_raw(const std::string& path, int width, int height, PixelFormat format) {
  SequenceOutput out;
  out.kind_ = Kind::RawFile;
  out.writer_ = std::make_shared<SequenceWriter>(path, width, height, format);
  return out;
}

SequenceOutput SequenceOutput::create_dir(const std::string& path, ImageFormat format) {
  SequenceOutput out;
  out.kind_ = Kind::ImageDir;
  out.path_ = path;
  out.image_format_ = format;
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory: " + path);
  return out;
}

SequenceOutput SequenceOutput::create_image(const std::string& path) {
  SequenceOutput out;
  out.kind_ = Kind::SingleImage;
  out.path_ = path;
  return out;
}

void SequenceOutput::write(const Frame& frame) {
  switch (kind_) {
    case Kind::RawFile:
      writer_->write(frame);
      break;
    case Kind::ImageDir: {
      char name[32];
      std::snprintf(name, sizeof name, "%06ld.%s", next_index_,
                    image_format_ == ImageFormat::Ppm ? "ppm" : "pgm");
      save_image(frame, (fs::path(path_) / name).string(), image_format_);
      break;
    }
    case Kind::SingleImage:
      if (next_index_ > 0) throw UsageError("single image output cannot hold multiple frames");
      save_image(frame, path_);
      break;
  }
  ++next_index_;
}

void SequenceOutput::finish() {
  if (kind_ == Kind::RawFile) writer_->finish();
}

}  // namespace roiquant
