#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roiquant/pipeline.hpp"

namespace roiquant {

/// Writes via a sibling temp file plus rename so readers never see a partial
/// file.
void write_file_atomic(const std::string& path, const std::string& content);

struct FrameMetricsRow {
  long frame = 0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  std::optional<double> roi_psnr;
  std::optional<double> roi_ms_ssim;
  std::optional<double> bpp;
};

/// frame,psnr,ms_ssim,roi_psnr,roi_ms_ssim,bpp with a trailing mean row.
/// Header lines prefixed with '#' record the effective configuration.
void write_metrics_csv(const std::string& path, const std::vector<std::string>& header_notes,
                       const std::vector<FrameMetricsRow>& rows);

/// x,profile_a[,profile_b]; the second profile column appears only when a
/// second candidate was measured.
void write_columns_csv(const std::string& path, const std::vector<std::string>& header_notes,
                       const std::vector<double>& profile_a,
                       const std::vector<double>& profile_b = {});

/// One JSON object per line, one line per frame.
void write_reports_jsonl(const std::string& path, const std::vector<FrameReport>& reports,
                         bool include_timings);

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart, one polyline per series.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series);

/// Numeric formatting used in every report: shortest fixed form with up to
/// four decimals, "inf" for infinities.
std::string format_metric(double value);

}  // namespace roiquant
