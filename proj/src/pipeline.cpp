#include "roiquant/pipeline.hpp"

#include <chrono>
#include <deque>
#include <future>
#include <utility>

#include "roiquant/colorspace.hpp"

namespace roiquant {
namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

DetectionSet effective_detections(const DetectionSet& detections, const Frame& frame,
                                  const PipelineConfig& config) {
  DetectionSet kept = filter_confidence(detections, config.confidence_threshold);
  DetectionSet out;
  out.frame_index = kept.frame_index;
  for (BoundingBox box : kept.boxes) {
    box = config.align_blocks ? align_box_to_blocks(box, frame.width, frame.height)
                              : clip_box(box, frame.width, frame.height);
    if (box.w > 0 && box.h > 0) out.boxes.push_back(box);
  }
  return out;
}

Frame convert_output(Frame frame, Colorspace input_colorspace, const PipelineConfig& config) {
  Colorspace want = input_colorspace;
  if (config.output_colorspace == OutputColorspace::Yuv) want = Colorspace::Yuv;
  if (config.output_colorspace == OutputColorspace::Rgb) want = Colorspace::Rgb;
  if (frame.colorspace == want) return frame;
  if (want == Colorspace::Yuv) return rgb_to_yuv(frame, config.color_compat);
  return yuv_to_rgb(frame);
}

// Quantize/dequantize every block of one plane in place; returns the zero
// fraction across all quantized coefficients.
double transform_plane(BytePlane& plane, const QuantTable& table, const PipelineConfig& config) {
  RealPlane shifted = dc_shift(plane, config.shift_constant);
  BlockGrid grid = split_blocks(shifted, config.pad_mode);
  long zeros = 0;
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      Block8 freq = forward_dct(grid.block(by, bx));
      CoeffBlock coeffs = quantize(freq, table);
      zeros += (coeffs.array() == 0).count();
      grid.block(by, bx) = inverse_dct(dequantize(coeffs, table));
    }
  }
  plane = dc_unshift_clip(merge_blocks(grid), config.shift_constant);
  return static_cast<double>(zeros) /
         (64.0 * static_cast<double>(grid.blocks_x) * static_cast<double>(grid.blocks_y));
}

}  // namespace

FrameResult preprocess_frame(const Frame& input, const DetectionSet& detections,
                             const PipelineConfig& config) {
  FrameResult result;
  result.report.frame_index = detections.frame_index;
  result.report.frame_area = static_cast<long>(input.width) * input.height;

  DetectionSet kept = effective_detections(detections, input, config);
  result.report.boxes_kept = static_cast<int>(kept.boxes.size());
  if (kept.boxes.empty()) {
    result.report.bypassed = true;
    result.frame = convert_output(input, input.colorspace, config);
    return result;
  }

  const auto t0 = Clock::now();
  Frame work = input.colorspace == Colorspace::Rgb ? rgb_to_yuv(input, config.color_compat)
                                                   : input;
  const auto t1 = Clock::now();

  std::vector<Patch> patches = extract_patches(work, kept);
  const auto t2 = Clock::now();

  const long object = union_area(kept.boxes);
  result.report.object_area = object;
  const int level = config.level_override
                        ? *config.level_override
                        : select_level(result.report.frame_area, object);
  if (level < 0 || level > 3) throw UsageError("quantization level out of range");
  result.report.level = level;

  const std::size_t lv = static_cast<std::size_t>(level);
  for (std::size_t i = 0; i < work.planes.size(); ++i) {
    const QuantTable& table = i == 0 ? config.bank.luma[lv] : config.bank.chroma[lv];
    result.report.zero_fraction.push_back(transform_plane(work.planes[i], table, config));
  }
  const auto t3 = Clock::now();

  work = restore_patches(std::move(work), patches);
  const auto t4 = Clock::now();

  result.frame = convert_output(std::move(work), input.colorspace, config);
  const auto t5 = Clock::now();

  if (config.collect_timings) {
    result.report.convert_ms = ms_between(t0, t1) + ms_between(t4, t5);
    result.report.transform_ms = ms_between(t2, t3);
    result.report.restore_ms = ms_between(t1, t2) + ms_between(t3, t4);
  }
  return result;
}

SequenceSummary preprocess_sequence(const SequenceInput& input, SequenceOutput& output,
                                    const Manifest& manifest, const PipelineConfig& config,
                                    int threads) {
  if (threads < 1) throw UsageError("thread count must be positive");
  if (manifest.width > 0 && (manifest.width != input.width() || manifest.height != input.height()))
    throw UsageError("manifest geometry does not match the input");

  SequenceSummary summary;
  const long count = input.frame_count();

  // Failures abort the run but always name the frame they happened on.
  auto run_one = [&](long index) {
    try {
      Frame frame = input.read(index);
      DetectionSet set = manifest.for_frame(index);
      set.frame_index = index;
      return preprocess_frame(frame, set, config);
    } catch (const UsageError& e) {
      throw UsageError("frame " + std::to_string(index) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError("frame " + std::to_string(index) + ": " + e.what());
    }
  };

  auto absorb = [&](FrameResult result) {
    output.write(result.frame);
    if (result.report.bypassed) ++summary.bypassed;
    summary.reports.push_back(std::move(result.report));
    ++summary.frames;
  };

  if (threads == 1) {
    for (long i = 0; i < count; ++i) absorb(run_one(i));
  } else {
    std::deque<std::future<FrameResult>> window;
    for (long i = 0; i < count; ++i) {
      window.push_back(std::async(std::launch::async, run_one, i));
      if (window.size() >= static_cast<std::size_t>(threads)) {
        absorb(window.front().get());
        window.pop_front();
      }
    }
    while (!window.empty()) {
      absorb(window.front().get());
      window.pop_front();
    }
  }
  output.finish();
  return summary;
}

}  // namespace roiquant
