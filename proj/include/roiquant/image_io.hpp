#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roiquant/types.hpp"

namespace roiquant {

enum class ImageFormat { Ppm, Pgm };
enum class PixelFormat { Yuv444p8, Yuv420p8, Rgb24 };

const char* pixel_format_name(PixelFormat f);
PixelFormat parse_pixel_format(const std::string& name);

/// Binary PPM (P6) / PGM (P5), maxval 255 only. Loads produce RGB frames from
/// PPM and single-plane frames from PGM.
Frame load_image(const std::string& path, ImageFormat format);
Frame load_image(const std::string& path);  // format from extension
void save_image(const Frame& frame, const std::string& path, ImageFormat format);
void save_image(const Frame& frame, const std::string& path);

/// Raw frame-sequential video file: planar Y,U,V order for YUV formats,
/// packed R,G,B for rgb24 (FFmpeg -f rawvideo compatible).
struct SequenceSpec {
  std::string path;
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::Yuv444p8;
  long frame_count = 0;

  std::size_t frame_bytes() const;

  // Frame count from the file size; errors when the size is not a whole
  // number of frames.
  static SequenceSpec probe(const std::string& path, int width, int height, PixelFormat format);
};

Frame read_sequence(const SequenceSpec& spec, long index);

/// Appends frames in order to a raw file. Content goes to a temp file that is
/// renamed into place by finish(), so interrupted runs leave no partial output.
class SequenceWriter {
 public:
  SequenceWriter(const std::string& path, int width, int height, PixelFormat format);
  ~SequenceWriter();
  void write(const Frame& frame);
  void finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RawGeometry {
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::Yuv444p8;
};

/// Uniform reader over the three sequence layouts: a raw video file, a
/// directory of numbered PPM/PGM frames, or a single image.
class SequenceInput {
 public:
  enum class Kind { RawFile, ImageDir, SingleImage };

  static SequenceInput open(const std::string& path, const std::optional<RawGeometry>& geometry);

  Kind kind() const { return kind_; }
  long frame_count() const { return frame_count_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::optional<RawGeometry>& geometry() const { return geometry_; }

  Frame read(long index) const;

 private:
  Kind kind_ = Kind::RawFile;
  long frame_count_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::optional<RawGeometry> geometry_;
  SequenceSpec spec_;                 // RawFile
  std::vector<std::string> files_;    // ImageDir
  std::string path_;                  // SingleImage
};

/// Writer counterpart: raw file, directory of images, or single image,
/// selected to mirror the input layout.
class SequenceOutput {
 public:
  static SequenceOutput create_raw(const std::string& path, int width, int height, PixelFormat format);
  static SequenceOutput create_dir(const std::string& path, ImageFormat format);
  static SequenceOutput create_image(const std::string& path);

  void write(const Frame& frame);
  void finish();

 private:
  enum class Kind { RawFile, ImageDir, SingleImage };
  Kind kind_ = Kind::RawFile;
  std::shared_ptr<SequenceWriter> writer_;
  std::string path_;
  ImageFormat image_format_ = ImageFormat::Ppm;
  long next_index_ = 0;
};

}  // namespace roiquant
