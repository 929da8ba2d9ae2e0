#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roiquant/dct.hpp"
#include "roiquant/detections.hpp"
#include "roiquant/image_io.hpp"
#include "roiquant/quant.hpp"
#include "roiquant/types.hpp"

namespace roiquant {

enum class OutputColorspace { AsInput, Yuv, Rgb };

struct PipelineConfig {
  MatrixBank bank = MatrixBank::standard();
  double confidence_threshold = 0.5;
  PadMode pad_mode = PadMode::ReplicateEdge;
  int shift_constant = 127;
  bool align_blocks = false;   // grow boxes to 8-pixel multiples before use
  bool color_compat = false;   // integer-approximation RGB-to-YUV path
  OutputColorspace output_colorspace = OutputColorspace::AsInput;
  std::optional<int> level_override;  // pin the level instead of deriving it
  bool collect_timings = false;
};

struct FrameReport {
  long frame_index = 0;
  bool bypassed = false;
  std::optional<int> level;
  long frame_area = 0;
  long object_area = 0;
  int boxes_kept = 0;
  std::vector<double> zero_fraction;  // per plane, quantized-coefficient zeros
  double convert_ms = 0.0;            // only populated when timings are on
  double transform_ms = 0.0;
  double restore_ms = 0.0;
};

struct FrameResult {
  Frame frame;
  FrameReport report;
};

/// One frame through the full chain: confidence filtering, colorspace
/// conversion, object patch capture, level selection, per-plane block DCT
/// quantize/dequantize, pixel-exact patch restoration. An empty filtered
/// detection set bypasses everything and returns the input unchanged.
FrameResult preprocess_frame(const Frame& input, const DetectionSet& detections,
                             const PipelineConfig& config);

struct SequenceSummary {
  long frames = 0;
  long bypassed = 0;
  std::vector<FrameReport> reports;
};

/// Whole-sequence driver; output mirrors the input arrangement (raw file,
/// image directory, single image). `threads` above 1 runs frames in a
/// bounded sliding window while keeping writes ordered.
SequenceSummary preprocess_sequence(const SequenceInput& input, SequenceOutput& output,
                                    const Manifest& manifest, const PipelineConfig& config,
                                    int threads = 1);

}  // namespace roiquant
