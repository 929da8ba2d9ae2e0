#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roiquant/detections.hpp"
#include "roiquant/image_io.hpp"

namespace roiquant {

/// External encoder description. Commands are shell text with {input},
/// {output}, {bitrate}, {width}, {height}, {fps}, {format} and {pass}
/// placeholders. Two-pass encoders get the encode command twice with
/// {pass} = 1 then 2.
struct EncoderTemplate {
  std::string name;
  std::string encode_cmd;
  std::string decode_cmd;
  bool two_pass = false;
  std::string extension = "bin";
};

std::vector<EncoderTemplate> load_encoder_templates(const std::string& path);

/// Empty when the executable cannot be found on PATH (or at its literal
/// location), otherwise the resolved path.
std::string find_executable(const std::string& name);

struct SweepVariant {
  std::string label;
  std::string path;  // raw sequence, same geometry as the reference
};

struct SweepConfig {
  std::vector<EncoderTemplate> encoders;
  std::vector<int> bitrates_kbps;
  std::string reference_path;  // ground truth every decode is scored against
  std::vector<SweepVariant> variants;
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::Yuv444p8;
  double fps = 25.0;
  Manifest manifest;  // optional; enables region metrics
  double confidence_threshold = 0.5;
  std::string temp_dir;
  bool keep_temps = false;
};

struct SweepCell {
  std::string encoder;
  int bitrate_kbps = 0;
  std::string variant;
  std::string status;  // ok, skipped, failed
  std::optional<double> bpp;
  std::optional<double> psnr;
  std::optional<double> ms_ssim;
  std::optional<double> roi_psnr;
  std::optional<double> roi_ms_ssim;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  bool any_skipped = false;
  bool any_failed = false;
};

/// Runs every encoder x bitrate x variant cell: encode, decode, score the
/// round trip against the reference. A missing encoder binary skips its cells
/// with a warning; a failing invocation marks the cell failed and the sweep
/// moves on.
SweepResult run_sweep(const SweepConfig& config, std::ostream& log);

/// encoder,bitrate_kbps,variant,status,bpp,psnr,ms_ssim,roi_psnr,roi_ms_ssim
/// Skipped cells become '# skipped: ...' header notes, not data rows, so the
/// row count is bitrates x encoders x variants minus the skips.
void write_sweep_csv(const std::string& path, const std::vector<std::string>& header_notes,
                     const std::vector<SweepCell>& cells);

}  // namespace roiquant
