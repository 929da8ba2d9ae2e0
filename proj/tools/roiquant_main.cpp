#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roiquant/colorspace.hpp"
#include "roiquant/metrics.hpp"
#include "roiquant/pipeline.hpp"
#include "roiquant/report.hpp"
#include "roiquant/sweep.hpp"

namespace fs = std::filesystem;
using namespace roiquant;

namespace {

struct Size {
  int width = 0;
  int height = 0;
};

Size parse_size(const std::string& text) {
  Size s;
  char extra;
  if (std::sscanf(text.c_str(), "%dx%d%c", &s.width, &s.height, &extra) != 2 ||
      s.width <= 0 || s.height <= 0)
    throw UsageError("bad --size '" + text + "', expected WxH");
  return s;
}

// x,y,w,h[@confidence][:label]
BoundingBox parse_box(const std::string& text) {
  BoundingBox box;
  std::string rest = text;
  const std::size_t colon = rest.find(':');
  if (colon != std::string::npos) {
    box.label = rest.substr(colon + 1);
    rest = rest.substr(0, colon);
  } else {
    box.label = "object";
  }
  const std::size_t at = rest.find('@');
  if (at != std::string::npos) {
    try {
      box.confidence = std::stod(rest.substr(at + 1));
    } catch (const std::exception&) {
      throw UsageError("bad confidence in --box '" + text + "'");
    }
    rest = rest.substr(0, at);
  }
  char extra;
  if (std::sscanf(rest.c_str(), "%d,%d,%d,%d%c", &box.x, &box.y, &box.w, &box.h, &extra) != 4)
    throw UsageError("bad --box '" + text + "', expected x,y,w,h[@conf][:label]");
  if (box.w <= 0 || box.h <= 0)
    throw UsageError("--box '" + text + "' must have positive width and height");
  if (box.confidence < 0.0 || box.confidence > 1.0)
    throw UsageError("--box '" + text + "' confidence must be in [0, 1]");
  return box;
}

std::optional<RawGeometry> make_geometry(const std::string& size_text, const std::string& format_text) {
  if (size_text.empty() && format_text.empty()) return std::nullopt;
  if (size_text.empty() || format_text.empty())
    throw UsageError("--size and --format must be given together");
  const Size s = parse_size(size_text);
  RawGeometry g;
  g.width = s.width;
  g.height = s.height;
  g.format = parse_pixel_format(format_text);
  return g;
}

PadMode parse_pad_mode(const std::string& text) {
  if (text == "replicate") return PadMode::ReplicateEdge;
  if (text == "zero") return PadMode::ZeroFill;
  throw UsageError("bad --pad-mode '" + text + "', expected replicate or zero");
}

OutputColorspace parse_output_colorspace(const std::string& text) {
  if (text == "asinput") return OutputColorspace::AsInput;
  if (text == "yuv") return OutputColorspace::Yuv;
  if (text == "rgb") return OutputColorspace::Rgb;
  throw UsageError("bad --output-colorspace '" + text + "'");
}

// Boxes for one frame, confidence-filtered and clipped, for region metrics.
std::vector<BoundingBox> frame_boxes(const Manifest& manifest, long index, double threshold,
                                     int width, int height) {
  DetectionSet set = filter_confidence(manifest.for_frame(index), threshold);
  std::vector<BoundingBox> boxes;
  for (BoundingBox box : set.boxes) {
    box = clip_box(box, width, height);
    if (box.w > 0 && box.h > 0) boxes.push_back(box);
  }
  return boxes;
}

std::string default_temp_dir() {
  if (const char* env = std::getenv("ROIQUANT_TMPDIR")) return env;
  return (fs::temp_directory_path() / ("roiquant-" + std::to_string(getpid()))).string();
}

struct ProcessOptions {
  std::string input, output, manifest_path, bank_path, report_path;
  std::string size_text, format_text, pad_text = "replicate", colorspace_text = "asinput";
  double confidence = 0.5;
  int shift = 127;
  int threads = 1;
  int force_level = -1;
  bool align_blocks = false, color_compat = false, timings = false;
};

int run_process(const ProcessOptions& opt) {
  PipelineConfig config;
  if (!opt.bank_path.empty()) config.bank = MatrixBank::from_file(opt.bank_path);
  config.confidence_threshold = opt.confidence;
  config.pad_mode = parse_pad_mode(opt.pad_text);
  config.shift_constant = opt.shift;
  config.align_blocks = opt.align_blocks;
  config.color_compat = opt.color_compat;
  config.output_colorspace = parse_output_colorspace(opt.colorspace_text);
  if (opt.force_level >= 0) {
    if (opt.force_level > 3) throw UsageError("--force-level must be 0..3");
    config.level_override = opt.force_level;
  }
  config.collect_timings = opt.timings;

  const Manifest manifest = parse_manifest(opt.manifest_path);
  SequenceInput input = SequenceInput::open(opt.input, make_geometry(opt.size_text, opt.format_text));

  SequenceOutput output = [&] {
    switch (input.kind()) {
      case SequenceInput::Kind::RawFile: {
        PixelFormat in_fmt = input.geometry()->format;
        PixelFormat out_fmt = in_fmt;
        if (config.output_colorspace == OutputColorspace::Yuv && in_fmt == PixelFormat::Rgb24)
          out_fmt = PixelFormat::Yuv444p8;
        if (config.output_colorspace == OutputColorspace::Rgb) out_fmt = PixelFormat::Rgb24;
        return SequenceOutput::create_raw(opt.output, input.width(), input.height(), out_fmt);
      }
      case SequenceInput::Kind::ImageDir: {
        const bool gray = input.read(0).planes.size() == 1;
        return SequenceOutput::create_dir(opt.output, gray ? ImageFormat::Pgm : ImageFormat::Ppm);
      }
      case SequenceInput::Kind::SingleImage:
      default:
        return SequenceOutput::create_image(opt.output);
    }
  }();

  std::cout << "config: confidence=" << format_metric(opt.confidence)
            << " pad=" << opt.pad_text << " shift=" << opt.shift
            << " align_blocks=" << (opt.align_blocks ? "on" : "off")
            << " color_compat=" << (opt.color_compat ? "on" : "off")
            << " colorspace=" << opt.colorspace_text
            << " bank=" << (opt.bank_path.empty() ? "standard" : opt.bank_path);
  if (config.level_override) std::cout << " force_level=" << *config.level_override;
  std::cout << "\n";

  SequenceSummary summary = preprocess_sequence(input, output, manifest, config, opt.threads);
  if (!opt.report_path.empty())
    write_reports_jsonl(opt.report_path, summary.reports, opt.timings);

  std::cout << "processed " << summary.frames << " frame" << (summary.frames == 1 ? "" : "s")
            << ", " << summary.bypassed << " bypassed\n";
  return 0;
}

struct MetricsOptions {
  std::string reference, distorted, distorted2, manifest_path, stream_path;
  std::string size_text, format_text;
  std::string output_csv, columns_csv, chart_svg;
  double confidence = 0.5;
  bool yuv_weighted = false;
};

int run_metrics(MetricsOptions opt) {
  // --columns alone yields both the CSV and a sibling SVG chart.
  if (!opt.columns_csv.empty() && opt.chart_svg.empty())
    opt.chart_svg = fs::path(opt.columns_csv).replace_extension(".svg").string();

  const auto geometry = make_geometry(opt.size_text, opt.format_text);
  SequenceInput ref = SequenceInput::open(opt.reference, geometry);
  SequenceInput dist = SequenceInput::open(opt.distorted, geometry);
  if (ref.frame_count() != dist.frame_count())
    throw UsageError("reference and distorted frame counts differ");

  std::optional<SequenceInput> dist2;
  if (!opt.distorted2.empty()) {
    dist2 = SequenceInput::open(opt.distorted2, geometry);
    if (dist2->frame_count() != ref.frame_count())
      throw UsageError("second distorted input frame count differs");
  }

  Manifest manifest;
  if (!opt.manifest_path.empty()) manifest = parse_manifest(opt.manifest_path);

  std::optional<double> stream_bpp;
  if (!opt.stream_path.empty()) {
    std::error_code ec;
    const auto bytes = fs::file_size(opt.stream_path, ec);
    if (ec) throw IoError("cannot stat stream: " + opt.stream_path);
    stream_bpp = bpp(bytes, ref.width(), ref.height(), ref.frame_count());
  }

  std::vector<FrameMetricsRow> rows;
  std::vector<double> profile_a, profile_b;
  int min_scales = SsimParams{}.scales;
  bool any_roi = false;
  for (long i = 0; i < ref.frame_count(); ++i) {
    Frame a = ref.read(i);
    Frame b = dist.read(i);
    FrameMetricsRow row;
    row.frame = i;
    row.psnr = frame_psnr(a, b, opt.yuv_weighted);
    MsSsimResult ms = frame_ms_ssim(a, b, {}, opt.yuv_weighted);
    row.ms_ssim = ms.value;
    min_scales = std::min(min_scales, ms.scales_used);
    const auto boxes = frame_boxes(manifest, i, opt.confidence, a.width, a.height);
    if (!boxes.empty()) {
      RoiMetrics roi = roi_metrics(a, b, boxes);
      row.roi_psnr = roi.psnr;
      row.roi_ms_ssim = roi.ms_ssim;
      any_roi = true;
    }
    row.bpp = stream_bpp;
    rows.push_back(row);

    if (!opt.columns_csv.empty() || !opt.chart_svg.empty()) {
      const auto cols = column_profile(a, b);
      if (profile_a.empty()) profile_a.assign(cols.size(), 0.0);
      for (std::size_t c = 0; c < cols.size(); ++c) profile_a[c] += cols[c];
      if (dist2) {
        const auto cols2 = column_profile(a, dist2->read(i));
        if (profile_b.empty()) profile_b.assign(cols2.size(), 0.0);
        for (std::size_t c = 0; c < cols2.size(); ++c) profile_b[c] += cols2[c];
      }
    }
  }
  const double n = static_cast<double>(ref.frame_count());
  for (double& v : profile_a) v /= n;
  for (double& v : profile_b) v /= n;

  if (!opt.manifest_path.empty() && !any_roi)
    std::cerr << "warning: no usable detections in " << opt.manifest_path
              << ", region columns are empty\n";

  std::vector<std::string> notes;
  notes.push_back("reference=" + opt.reference);
  notes.push_back("distorted=" + opt.distorted);
  if (dist2) notes.push_back("distorted2=" + opt.distorted2);
  if (!opt.manifest_path.empty())
    notes.push_back("roi=" + opt.manifest_path +
                    " confidence=" + format_metric(opt.confidence));
  if (!opt.stream_path.empty()) notes.push_back("stream=" + opt.stream_path);
  notes.push_back(std::string("channels=") + (opt.yuv_weighted ? "yuv-weighted" : "luma"));
  if (min_scales < SsimParams{}.scales)
    notes.push_back("ms_ssim scales reduced to " + std::to_string(min_scales) +
                    " (input too small for the full pyramid)");

  if (!opt.output_csv.empty()) write_metrics_csv(opt.output_csv, notes, rows);
  if (!opt.columns_csv.empty()) write_columns_csv(opt.columns_csv, notes, profile_a, profile_b);
  if (!opt.chart_svg.empty()) {
    std::vector<ChartSeries> series;
    ChartSeries a_series;
    a_series.label = "profile_a";
    for (std::size_t c = 0; c < profile_a.size(); ++c) {
      a_series.x.push_back(static_cast<double>(c));
      a_series.y.push_back(profile_a[c]);
    }
    series.push_back(std::move(a_series));
    if (!profile_b.empty()) {
      ChartSeries b_series;
      b_series.label = "profile_b";
      for (std::size_t c = 0; c < profile_b.size(); ++c) {
        b_series.x.push_back(static_cast<double>(c));
        b_series.y.push_back(profile_b[c]);
      }
      series.push_back(std::move(b_series));
    }
    write_svg_chart(opt.chart_svg, "Column quality profile", "column", "SSIM", series);
  }

  // Keep the terminal summary to the whole-sequence means.
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& row : rows) {
    psnr_sum += row.psnr;
    ssim_sum += row.ms_ssim;
  }
  std::cout << "frames=" << rows.size() << " mean_psnr=" << format_metric(psnr_sum / n)
            << " mean_ms_ssim=" << format_metric(ssim_sum / n);
  if (stream_bpp) std::cout << " bpp=" << format_metric(*stream_bpp);
  std::cout << "\n";
  return 0;
}

struct SweepOptions {
  std::string reference, encoders_path, manifest_path, output_csv, chart_svg, temp_dir;
  std::string size_text, format_text = "yuv444p", bitrates_text;
  std::vector<std::string> variant_texts;
  double fps = 25.0;
  double confidence = 0.5;
  bool keep_temps = false;
};

int run_sweep_cmd(const SweepOptions& opt) {
  SweepConfig config;
  config.encoders = load_encoder_templates(opt.encoders_path);

  std::istringstream rates(opt.bitrates_text);
  std::string tok;
  while (std::getline(rates, tok, ',')) {
    try {
      const int kbps = std::stoi(tok);
      if (kbps <= 0) throw std::invalid_argument(tok);
      config.bitrates_kbps.push_back(kbps);
    } catch (const std::exception&) {
      throw UsageError("bad --bitrates entry '" + tok + "'");
    }
  }

  for (const std::string& text : opt.variant_texts) {
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
      throw UsageError("bad --variant '" + text + "', expected label=path");
    config.variants.push_back({text.substr(0, eq), text.substr(eq + 1)});
  }

  const Size size = parse_size(opt.size_text);
  config.reference_path = opt.reference;
  config.width = size.width;
  config.height = size.height;
  config.format = parse_pixel_format(opt.format_text);
  config.fps = opt.fps;
  if (!opt.manifest_path.empty()) config.manifest = parse_manifest(opt.manifest_path);
  config.confidence_threshold = opt.confidence;
  config.temp_dir = opt.temp_dir.empty() ? default_temp_dir() : opt.temp_dir;
  config.keep_temps = opt.keep_temps;

  SweepResult result = run_sweep(config, std::cerr);

  std::vector<std::string> notes;
  notes.push_back("reference=" + opt.reference);
  notes.push_back("encoders=" + opt.encoders_path);
  notes.push_back("fps=" + [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", opt.fps);
    return std::string(buf);
  }());
  write_sweep_csv(opt.output_csv, notes, result.cells);

  if (!opt.chart_svg.empty()) {
    std::vector<ChartSeries> series;
    for (const SweepCell& cell : result.cells) {
      if (cell.status != "ok") continue;
      const std::string label = cell.encoder + "/" + cell.variant;
      auto it = std::find_if(series.begin(), series.end(),
                             [&](const ChartSeries& s) { return s.label == label; });
      if (it == series.end()) {
        series.push_back({label, {}, {}});
        it = series.end() - 1;
      }
      it->x.push_back(static_cast<double>(cell.bitrate_kbps));
      it->y.push_back(cell.psnr.value_or(0.0));
    }
    if (series.empty())
      std::cerr << "warning: no successful cells, chart not written\n";
    else
      write_svg_chart(opt.chart_svg, "Rate sweep", "bitrate (kbps)", "PSNR (dB)", series);
  }

  long ok = 0, skipped = 0, failed = 0;
  for (const SweepCell& cell : result.cells) {
    if (cell.status == "ok") ++ok;
    if (cell.status == "skipped") ++skipped;
    if (cell.status == "failed") ++failed;
  }
  std::cout << "cells: " << ok << " ok, " << skipped << " skipped, " << failed << " failed\n";
  return result.any_failed ? 3 : 0;
}

struct StubDetectOptions {
  std::string size_text, output_path;
  std::vector<std::string> box_texts;
  long frames = 1;
};

int run_stub_detect(const StubDetectOptions& opt) {
  const Size size = parse_size(opt.size_text);
  if (opt.frames <= 0) throw UsageError("--frames must be positive");

  std::vector<BoundingBox> boxes;
  for (const std::string& text : opt.box_texts) {
    BoundingBox box = parse_box(text);
    BoundingBox clipped = clip_box(box, size.width, size.height);
    if (clipped.w <= 0 || clipped.h <= 0) {
      std::cerr << "warning: --box '" << text << "' lies outside the frame, dropped\n";
      continue;
    }
    if (clipped.x != box.x || clipped.y != box.y || clipped.w != box.w || clipped.h != box.h)
      std::cerr << "warning: --box '" << text << "' clipped to the frame\n";
    boxes.push_back(clipped);
  }

  Manifest manifest;
  manifest.width = size.width;
  manifest.height = size.height;
  for (long i = 0; i < opt.frames; ++i) {
    DetectionSet set;
    set.frame_index = i;
    set.boxes = boxes;
    manifest.frames[i] = std::move(set);
  }
  write_manifest(manifest, opt.output_path);
  std::cout << "wrote " << opt.output_path << " (" << opt.frames << " frame"
            << (opt.frames == 1 ? "" : "s") << ", " << boxes.size() << " box"
            << (boxes.size() == 1 ? "" : "es") << " each)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection-guided adaptive quantization preprocessing and measurement"};
  app.require_subcommand(1);

  ProcessOptions process_opt;
  CLI::App* process = app.add_subcommand(
      "process", "Quantize non-object regions, keep detected objects untouched");
  process->add_option("--input", process_opt.input, "Raw video, image directory, or single image")
      ->required();
  process->add_option("--out", process_opt.output, "Output path, mirrors the input layout")
      ->required();
  process->add_option("--detections", process_opt.manifest_path, "Detection manifest JSON")
      ->required();
  process->add_option("--size", process_opt.size_text, "Raw input geometry, WxH");
  process->add_option("--format", process_opt.format_text, "Raw pixel format: yuv444p, yuv420p, rgb24");
  process->add_option("--quality-bank", process_opt.bank_path, "Quantization matrix bank file");
  process->add_option("--confidence", process_opt.confidence, "Detection confidence threshold")
      ->capture_default_str();
  process->add_option("--pad-mode", process_opt.pad_text, "Block padding: replicate or zero")
      ->capture_default_str();
  process->add_option("--shift", process_opt.shift, "Sample shift applied before the transform")
      ->capture_default_str();
  process->add_flag("--align-blocks", process_opt.align_blocks,
                    "Grow boxes to 8-pixel multiples before use");
  process->add_flag("--color-compat", process_opt.color_compat,
                    "Integer-approximation RGB to YUV conversion");
  process->add_option("--output-colorspace", process_opt.colorspace_text,
                      "asinput, yuv, or rgb")
      ->capture_default_str();
  process->add_option("--force-level", process_opt.force_level,
                      "Pin the quantization level (0..3) instead of deriving it");
  process->add_option("--threads", process_opt.threads, "Worker threads")->capture_default_str();
  process->add_option("--report", process_opt.report_path, "Per-frame JSONL report path");
  process->add_flag("--timings", process_opt.timings, "Include stage timings in the report");

  MetricsOptions metrics_opt;
  CLI::App* metrics = app.add_subcommand("metrics", "Score a distorted sequence against a reference");
  metrics->add_option("--reference", metrics_opt.reference, "Reference input")->required();
  metrics->add_option("--distorted", metrics_opt.distorted, "Distorted input")->required();
  metrics->add_option("--distorted2", metrics_opt.distorted2,
                      "Second distorted input for the column comparison");
  metrics->add_option("--size", metrics_opt.size_text, "Raw input geometry, WxH");
  metrics->add_option("--format", metrics_opt.format_text, "Raw pixel format");
  metrics->add_option("--roi", metrics_opt.manifest_path, "Detection manifest for region metrics");
  metrics->add_option("--confidence", metrics_opt.confidence, "Confidence threshold")
      ->capture_default_str();
  metrics->add_option("--stream", metrics_opt.stream_path,
                      "Encoded artifact whose size yields bits per pixel");
  metrics->add_option("--out", metrics_opt.output_csv, "Per-frame metrics CSV");
  metrics->add_option("--columns", metrics_opt.columns_csv,
                      "Column profile CSV; a sibling SVG chart is derived unless --chart is given");
  metrics->add_option("--chart", metrics_opt.chart_svg, "Column profile SVG chart");
  metrics->add_flag("--yuv-weighted", metrics_opt.yuv_weighted,
                    "6:1:1 YUV weighting instead of luma only");

  SweepOptions sweep_opt;
  CLI::App* sweep = app.add_subcommand("sweep", "Encode variants across bitrates and score the round trips");
  sweep->add_option("--reference", sweep_opt.reference, "Ground-truth raw sequence")->required();
  sweep->add_option("--variant", sweep_opt.variant_texts, "label=path raw sequence, repeatable")
      ->required();
  sweep->add_option("--size", sweep_opt.size_text, "Geometry, WxH")->required();
  sweep->add_option("--format", sweep_opt.format_text, "Raw pixel format")->capture_default_str();
  sweep->add_option("--fps", sweep_opt.fps, "Frame rate handed to encoders")->capture_default_str();
  sweep->add_option("--encoders", sweep_opt.encoders_path, "Encoder template JSON")->required();
  sweep->add_option("--bitrates", sweep_opt.bitrates_text, "Comma-separated kbps list")->required();
  sweep->add_option("--roi", sweep_opt.manifest_path, "Detection manifest for region metrics");
  sweep->add_option("--confidence", sweep_opt.confidence, "Confidence threshold")
      ->capture_default_str();
  sweep->add_option("--out", sweep_opt.output_csv, "Sweep results CSV")->required();
  sweep->add_option("--chart", sweep_opt.chart_svg, "Rate-distortion SVG chart");
  sweep->add_option("--temp-dir", sweep_opt.temp_dir,
                    "Scratch directory (default: ROIQUANT_TMPDIR or the system temp)");
  sweep->add_flag("--keep-temps", sweep_opt.keep_temps, "Keep per-cell scratch files");

  StubDetectOptions stub_opt;
  CLI::App* stub = app.add_subcommand("stub-detect", "Write a manifest from hand-given boxes");
  stub->add_option("--size", stub_opt.size_text, "Frame geometry, WxH")->required();
  stub->add_option("--frames", stub_opt.frames, "Frame count")->capture_default_str();
  stub->add_option("--box", stub_opt.box_texts, "x,y,w,h[@conf][:label], repeatable");
  stub->add_option("--out", stub_opt.output_path, "Manifest path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(process)) return run_process(process_opt);
    if (app.got_subcommand(metrics)) return run_metrics(metrics_opt);
    if (app.got_subcommand(sweep)) return run_sweep_cmd(sweep_opt);
    if (app.got_subcommand(stub)) return run_stub_detect(stub_opt);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
