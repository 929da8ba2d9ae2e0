#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "roiquant/colorspace.hpp"
#include "roiquant/pipeline.hpp"
#include "roiquant/quant.hpp"
#include "support.hpp"

using namespace roiquant;
using namespace testsupport;

namespace {

DetectionSet one_box(int x, int y, int w, int h, double conf = 1.0) {
  DetectionSet set;
  set.boxes.push_back({x, y, w, h, conf, "object"});
  return set;
}

// Largest |a - b| over the given luma rectangle of plane `p`, rect in the
// plane's own coordinates.
int max_abs_diff(const BytePlane& a, const BytePlane& b, int x0, int y0, int x1, int y1) {
  int worst = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      worst = std::max(worst, std::abs(static_cast<int>(a(y, x)) - static_cast<int>(b(y, x))));
  return worst;
}

long count_diffs(const BytePlane& a, const BytePlane& b) {
  return (a.cast<int>() != b.cast<int>()).count();
}

MatrixBank all_ones_bank() {
  MatrixBank bank;
  for (int i = 0; i < 4; ++i) {
    bank.luma[static_cast<std::size_t>(i)] = QuantTable::Ones();
    bank.chroma[static_cast<std::size_t>(i)] = QuantTable::Ones();
  }
  return bank;
}

}  // namespace

TEST_CASE("frames without usable detections pass through bit-exact") {
  const Frame input = textured_frame(64, 64, Colorspace::Yuv, Subsampling::S444, 11);
  const PipelineConfig config;

  SUBCASE("no boxes at all") {
    FrameResult r = preprocess_frame(input, DetectionSet{}, config);
    CHECK(r.report.bypassed);
    CHECK(r.frame.sample_equal(input));
    CHECK_FALSE(r.report.level.has_value());
    CHECK(r.report.zero_fraction.empty());
    CHECK(r.report.boxes_kept == 0);
  }
  SUBCASE("every box below the confidence threshold") {
    FrameResult r = preprocess_frame(input, one_box(8, 8, 16, 16, 0.3), config);
    CHECK(r.report.bypassed);
    CHECK(r.frame.sample_equal(input));
  }
  SUBCASE("every box clipped to nothing") {
    FrameResult r = preprocess_frame(input, one_box(100, 100, 16, 16), config);
    CHECK(r.report.bypassed);
    CHECK(r.frame.sample_equal(input));
  }
}

TEST_CASE("object pixels survive exactly while the background is requantized") {
  const Frame input = textured_frame(64, 64, Colorspace::Yuv, Subsampling::S444, 23);
  FrameResult r = preprocess_frame(input, one_box(16, 16, 24, 24, 0.9), PipelineConfig{});

  CHECK_FALSE(r.report.bypassed);
  CHECK(r.report.boxes_kept == 1);
  CHECK(r.report.frame_area == 64 * 64);
  CHECK(r.report.object_area == 24 * 24);
  REQUIRE(r.report.level.has_value());
  CHECK(*r.report.level == select_level(64 * 64, 24 * 24));

  REQUIRE(r.report.zero_fraction.size() == 3);
  for (double z : r.report.zero_fraction) {
    CHECK(z > 0.0);
    CHECK(z < 1.0);
  }

  long outside_diffs = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 16, 16, 40, 40) == 0);
    outside_diffs += count_diffs(r.frame.planes[p], input.planes[p]);
  }
  CHECK(outside_diffs > 0);
}

TEST_CASE("a frame-covering box restores everything at the heaviest level") {
  const Frame input = noise_frame(32, 32, Colorspace::Yuv, Subsampling::S444, 5);
  FrameResult r = preprocess_frame(input, one_box(0, 0, 32, 32), PipelineConfig{});

  CHECK_FALSE(r.report.bypassed);
  REQUIRE(r.report.level.has_value());
  CHECK(*r.report.level == 0);
  CHECK(r.report.object_area == 32 * 32);
  CHECK(r.frame.sample_equal(input));
}

TEST_CASE("the reported level tracks the background share") {
  const Frame input = textured_frame(40, 40, Colorspace::Yuv, Subsampling::S444, 7);
  FrameResult r = preprocess_frame(input, one_box(10, 10, 20, 20), PipelineConfig{});
  REQUIRE(r.report.level.has_value());
  CHECK(*r.report.level == 2);  // round(3 * 1200 / 1600)
  CHECK(r.report.object_area == 400);
}

TEST_CASE("a level override replaces the derived level and is validated") {
  const Frame input = textured_frame(40, 40, Colorspace::Yuv, Subsampling::S444, 7);
  const DetectionSet set = one_box(10, 10, 20, 20);

  PipelineConfig config;
  config.level_override = 0;
  FrameResult heavy = preprocess_frame(input, set, config);
  REQUIRE(heavy.report.level.has_value());
  CHECK(*heavy.report.level == 0);

  config.level_override = 3;
  FrameResult gentle = preprocess_frame(input, set, config);
  CHECK(*gentle.report.level == 3);
  CHECK(heavy.report.zero_fraction[0] > gentle.report.zero_fraction[0]);

  config.level_override = 4;
  CHECK_THROWS_WITH_AS(preprocess_frame(input, set, config), "quantization level out of range",
                       UsageError);
  config.level_override = -1;
  CHECK_THROWS_WITH_AS(preprocess_frame(input, set, config), "quantization level out of range",
                       UsageError);
}

TEST_CASE("block alignment widens the protected region to 8-pixel multiples") {
  const Frame input = noise_frame(64, 64, Colorspace::Yuv, Subsampling::S444, 31);
  const DetectionSet set = one_box(3, 5, 10, 6);

  PipelineConfig aligned;
  aligned.align_blocks = true;
  FrameResult r = preprocess_frame(input, set, aligned);
  CHECK(r.report.object_area == 16 * 16);
  for (std::size_t p = 0; p < 3; ++p)
    CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 0, 0, 16, 16) == 0);

  FrameResult loose = preprocess_frame(input, set, PipelineConfig{});
  CHECK(loose.report.object_area == 10 * 6);
  CHECK(max_abs_diff(loose.frame.planes[0], input.planes[0], 3, 5, 13, 11) == 0);
  long corner_diffs = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    BytePlane got = loose.frame.planes[p].block(0, 0, 16, 16);
    BytePlane want = input.planes[p].block(0, 0, 16, 16);
    corner_diffs += count_diffs(got, want);
  }
  CHECK(corner_diffs > 0);
}

TEST_CASE("an all-ones bank is transparent up to rounding in the working colorspace") {
  PipelineConfig config;
  config.bank = all_ones_bank();

  SUBCASE("working-colorspace input stays within one rounding step") {
    const Frame input = noise_frame(64, 64, Colorspace::Yuv, Subsampling::S444, 41);
    FrameResult r = preprocess_frame(input, one_box(16, 16, 16, 16), config);
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 16, 16, 32, 32) == 0);
      CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 0, 0, 64, 64) <= 2);
    }
  }
  SUBCASE("converted output is scored against the converted input") {
    const Frame input = noise_frame(64, 64, Colorspace::Rgb, Subsampling::S444, 43);
    config.output_colorspace = OutputColorspace::Yuv;
    FrameResult r = preprocess_frame(input, one_box(16, 16, 16, 16), config);
    const Frame baseline = rgb_to_yuv(input);
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(max_abs_diff(r.frame.planes[p], baseline.planes[p], 16, 16, 32, 32) == 0);
      CHECK(max_abs_diff(r.frame.planes[p], baseline.planes[p], 0, 0, 64, 64) <= 2);
    }
  }
  SUBCASE("a full color round trip adds the conversion error on top") {
    const Frame input = noise_frame(64, 64, Colorspace::Rgb, Subsampling::S444, 47);
    FrameResult r = preprocess_frame(input, one_box(16, 16, 16, 16), config);
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 16, 16, 32, 32) <= 1);
      CHECK(max_abs_diff(r.frame.planes[p], input.planes[p], 0, 0, 64, 64) <= 4);
    }
  }
}

TEST_CASE("odd-coordinate boxes restore every subsampled plane exactly") {
  const Frame input = noise_frame(48, 32, Colorspace::Yuv, Subsampling::S420, 53);
  FrameResult r = preprocess_frame(input, one_box(3, 5, 7, 9), PipelineConfig{});

  CHECK_FALSE(r.report.bypassed);
  CHECK(max_abs_diff(r.frame.planes[0], input.planes[0], 3, 5, 10, 14) == 0);
  // Chroma cover of [3,10) x [5,14) at half resolution: [1,5) x [2,7).
  CHECK(max_abs_diff(r.frame.planes[1], input.planes[1], 1, 2, 5, 7) == 0);
  CHECK(max_abs_diff(r.frame.planes[2], input.planes[2], 1, 2, 5, 7) == 0);
  CHECK(count_diffs(r.frame.planes[0], input.planes[0]) > 0);
}

TEST_CASE("output colorspace requests are honored on both paths") {
  const Frame yuv = textured_frame(32, 32, Colorspace::Yuv, Subsampling::S444, 61);
  const Frame rgb = textured_frame(32, 32, Colorspace::Rgb, Subsampling::S444, 67);

  SUBCASE("processed frame converted on the way out") {
    PipelineConfig config;
    config.output_colorspace = OutputColorspace::Rgb;
    FrameResult r = preprocess_frame(yuv, one_box(8, 8, 8, 8), config);
    CHECK(r.frame.colorspace == Colorspace::Rgb);
    CHECK(r.frame.planes.size() == 3);
  }
  SUBCASE("mirror the input by default") {
    FrameResult r = preprocess_frame(rgb, one_box(8, 8, 8, 8), PipelineConfig{});
    CHECK(r.frame.colorspace == Colorspace::Rgb);
  }
  SUBCASE("bypassed frames are still converted") {
    PipelineConfig config;
    config.output_colorspace = OutputColorspace::Yuv;
    FrameResult r = preprocess_frame(rgb, DetectionSet{}, config);
    CHECK(r.report.bypassed);
    CHECK(r.frame.sample_equal(rgb_to_yuv(rgb)));
  }
}

TEST_CASE("single-plane frames are quantized with the luminance tables") {
  const BytePlane content = textured_plane(32, 32, 71);
  Frame gray = make_gray_frame(32, 32);
  gray.planes[0] = content;
  Frame color = make_frame(32, 32, Colorspace::Yuv, Subsampling::S444);
  color.planes[0] = content;

  const DetectionSet set = one_box(8, 8, 8, 8);
  FrameResult g = preprocess_frame(gray, set, PipelineConfig{});
  FrameResult c = preprocess_frame(color, set, PipelineConfig{});

  REQUIRE(g.report.zero_fraction.size() == 1);
  CHECK(g.report.zero_fraction[0] == c.report.zero_fraction[0]);
  CHECK(g.frame.planes[0].isApprox(c.frame.planes[0]));
  CHECK(max_abs_diff(g.frame.planes[0], content, 8, 8, 16, 16) == 0);
  CHECK(count_diffs(g.frame.planes[0], content) > 0);
}

TEST_CASE("timings stay zero unless requested") {
  const Frame input = noise_frame(128, 128, Colorspace::Yuv, Subsampling::S444, 73);
  const DetectionSet set = one_box(32, 32, 32, 32);

  FrameResult off = preprocess_frame(input, set, PipelineConfig{});
  CHECK(off.report.convert_ms == 0.0);
  CHECK(off.report.transform_ms == 0.0);
  CHECK(off.report.restore_ms == 0.0);

  PipelineConfig config;
  config.collect_timings = true;
  FrameResult on = preprocess_frame(input, set, config);
  CHECK(on.report.transform_ms > 0.0);

  FrameResult bypassed = preprocess_frame(input, DetectionSet{}, config);
  CHECK(bypassed.report.transform_ms == 0.0);
}

TEST_CASE("the sequence driver bypasses frames without detections and reports per frame") {
  TempDir dir;
  std::vector<Frame> frames;
  for (int i = 0; i < 3; ++i)
    frames.push_back(textured_frame(48, 48, Colorspace::Yuv, Subsampling::S444,
                                    100u + static_cast<std::uint32_t>(i)));
  const std::string in_path = dir.file("in.raw");
  write_raw_frames(in_path, frames, PixelFormat::Yuv444p8);

  Manifest manifest;
  manifest.width = 48;
  manifest.height = 48;
  manifest.frames[1] = DetectionSet{1, {{8, 8, 16, 16, 0.9, "object"}}};

  const std::string out_path = dir.file("out.raw");
  SequenceInput input = SequenceInput::open(in_path, RawGeometry{48, 48, PixelFormat::Yuv444p8});
  SequenceOutput output = SequenceOutput::create_raw(out_path, 48, 48, PixelFormat::Yuv444p8);
  SequenceSummary summary = preprocess_sequence(input, output, manifest, PipelineConfig{});

  CHECK(summary.frames == 3);
  CHECK(summary.bypassed == 2);
  REQUIRE(summary.reports.size() == 3);
  CHECK(summary.reports[0].bypassed);
  CHECK_FALSE(summary.reports[1].bypassed);
  CHECK(summary.reports[2].bypassed);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(summary.reports[i].frame_index == static_cast<long>(i));

  SequenceSpec spec = SequenceSpec::probe(out_path, 48, 48, PixelFormat::Yuv444p8);
  REQUIRE(spec.frame_count == 3);
  CHECK(read_sequence(spec, 0).sample_equal(frames[0]));
  CHECK(read_sequence(spec, 2).sample_equal(frames[2]));
  Frame middle = read_sequence(spec, 1);
  CHECK(max_abs_diff(middle.planes[0], frames[1].planes[0], 8, 8, 24, 24) == 0);
  CHECK_FALSE(middle.sample_equal(frames[1]));
}

TEST_CASE("multithreaded runs write the same bytes in the same order") {
  TempDir dir;
  std::vector<Frame> frames;
  for (int i = 0; i < 8; ++i)
    frames.push_back(noise_frame(32, 32, Colorspace::Yuv, Subsampling::S444,
                                 200u + static_cast<std::uint32_t>(i)));
  const std::string in_path = dir.file("in.raw");
  write_raw_frames(in_path, frames, PixelFormat::Yuv444p8);

  Manifest manifest;
  manifest.width = 32;
  manifest.height = 32;
  for (long i = 0; i < 8; i += 2)
    manifest.frames[i] = DetectionSet{i, {{4, 4, 12, 12, 1.0, "object"}}};

  auto run = [&](int threads, const std::string& name) {
    SequenceInput input = SequenceInput::open(in_path, RawGeometry{32, 32, PixelFormat::Yuv444p8});
    SequenceOutput output = SequenceOutput::create_raw(dir.file(name), 32, 32,
                                                       PixelFormat::Yuv444p8);
    return preprocess_sequence(input, output, manifest, PipelineConfig{}, threads);
  };
  SequenceSummary serial = run(1, "serial.raw");
  SequenceSummary parallel = run(3, "parallel.raw");

  CHECK(serial.frames == parallel.frames);
  CHECK(serial.bypassed == parallel.bypassed);
  REQUIRE(serial.reports.size() == parallel.reports.size());
  for (std::size_t i = 0; i < serial.reports.size(); ++i) {
    CHECK(serial.reports[i].bypassed == parallel.reports[i].bypassed);
    CHECK(serial.reports[i].level == parallel.reports[i].level);
  }
  CHECK(read_file(dir.file("serial.raw")) == read_file(dir.file("parallel.raw")));
}

TEST_CASE("manifest geometry must match the sequence") {
  TempDir dir;
  const std::string in_path = dir.file("in.raw");
  write_raw_frames(in_path, {noise_frame(32, 32, Colorspace::Yuv, Subsampling::S444, 1)},
                   PixelFormat::Yuv444p8);
  SequenceInput input = SequenceInput::open(in_path, RawGeometry{32, 32, PixelFormat::Yuv444p8});
  SequenceOutput output = SequenceOutput::create_raw(dir.file("out.raw"), 32, 32,
                                                     PixelFormat::Yuv444p8);
  Manifest manifest;
  manifest.width = 64;
  manifest.height = 64;
  CHECK_THROWS_WITH_AS(preprocess_sequence(input, output, manifest, PipelineConfig{}),
                       "manifest geometry does not match the input", UsageError);
}

TEST_CASE("sequence failures name the frame they happened on") {
  TempDir dir;

  SUBCASE("read errors") {
    std::filesystem::create_directory(dir.path / "frames");
    save_image(textured_frame(16, 16, Colorspace::Rgb, Subsampling::S444, 1),
               (dir.path / "frames" / "000000.ppm").string());
    save_image(textured_frame(8, 8, Colorspace::Rgb, Subsampling::S444, 2),
               (dir.path / "frames" / "000001.ppm").string());
    SequenceInput input = SequenceInput::open((dir.path / "frames").string(), std::nullopt);
    REQUIRE(input.frame_count() == 2);
    SequenceOutput output = SequenceOutput::create_dir((dir.path / "out").string(),
                                                       ImageFormat::Ppm);
    CHECK_THROWS_WITH_AS(preprocess_sequence(input, output, Manifest{}, PipelineConfig{}),
                         doctest::Contains("frame 1:"), IoError);
  }
  SUBCASE("processing errors") {
    const std::string in_path = dir.file("in.raw");
    write_raw_frames(in_path, {noise_frame(16, 16, Colorspace::Yuv, Subsampling::S444, 3)},
                     PixelFormat::Yuv444p8);
    SequenceInput input = SequenceInput::open(in_path,
                                              RawGeometry{16, 16, PixelFormat::Yuv444p8});
    SequenceOutput output = SequenceOutput::create_raw(dir.file("out.raw"), 16, 16,
                                                       PixelFormat::Yuv444p8);
    Manifest manifest;
    manifest.width = 16;
    manifest.height = 16;
    manifest.frames[0] = DetectionSet{0, {{2, 2, 4, 4, 1.0, "object"}}};
    PipelineConfig config;
    config.level_override = 9;
    CHECK_THROWS_WITH_AS(preprocess_sequence(input, output, manifest, config),
                         "frame 0: quantization level out of range", UsageError);
  }
}
