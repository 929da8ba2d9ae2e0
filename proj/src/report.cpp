#include "roiquant/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace roiquant {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

std::string csv_cell(const std::optional<double>& v) {
  return v ? format_metric(*v) : std::string();
}

std::optional<double> column_mean(const std::vector<FrameMetricsRow>& rows,
                                  std::optional<double> FrameMetricsRow::*field) {
  double sum = 0.0;
  long n = 0;
  for (const FrameMetricsRow& row : rows) {
    if (row.*field) {
      sum += *(row.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace " + path);
  }
}

std::string format_metric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

void write_metrics_csv(const std::string& path, const std::vector<std::string>& header_notes,
                       const std::vector<FrameMetricsRow>& rows) {
  std::ostringstream out;
  for (const std::string& note : header_notes) out << "# " << note << "\n";
  out << "frame,psnr,ms_ssim,roi_psnr,roi_ms_ssim,bpp\n";
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const FrameMetricsRow& row : rows) {
    psnr_sum += row.psnr;
    ssim_sum += row.ms_ssim;
    out << row.frame << ',' << format_metric(row.psnr) << ',' << format_metric(row.ms_ssim)
        << ',' << csv_cell(row.roi_psnr) << ',' << csv_cell(row.roi_ms_ssim) << ','
        << csv_cell(row.bpp) << "\n";
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    out << "mean," << format_metric(psnr_sum / n) << ',' << format_metric(ssim_sum / n) << ','
        << csv_cell(column_mean(rows, &FrameMetricsRow::roi_psnr)) << ','
        << csv_cell(column_mean(rows, &FrameMetricsRow::roi_ms_ssim)) << ','
        << csv_cell(column_mean(rows, &FrameMetricsRow::bpp)) << "\n";
  }
  write_file_atomic(path, out.str());
}

void write_columns_csv(const std::string& path, const std::vector<std::string>& header_notes,
                       const std::vector<double>& profile_a,
                       const std::vector<double>& profile_b) {
  if (!profile_b.empty() && profile_b.size() != profile_a.size())
    throw UsageError("column profiles differ in length");
  std::ostringstream out;
  for (const std::string& note : header_notes) out << "# " << note << "\n";
  out << (profile_b.empty() ? "x,profile_a\n" : "x,profile_a,profile_b\n");
  for (std::size_t i = 0; i < profile_a.size(); ++i) {
    out << i << ',' << format_metric(profile_a[i]);
    if (!profile_b.empty()) out << ',' << format_metric(profile_b[i]);
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

void write_reports_jsonl(const std::string& path, const std::vector<FrameReport>& reports,
                         bool include_timings) {
  std::ostringstream out;
  for (const FrameReport& report : reports) {
    nlohmann::ordered_json j;
    j["frame"] = report.frame_index;
    j["bypassed"] = report.bypassed;
    if (report.level)
      j["level"] = *report.level;
    else
      j["level"] = nullptr;
    j["frame_area"] = report.frame_area;
    j["object_area"] = report.object_area;
    j["boxes_kept"] = report.boxes_kept;
    j["zero_fraction"] = report.zero_fraction;
    if (include_timings) {
      j["timings"] = {{"convert_ms", report.convert_ms},
                      {"transform_ms", report.transform_ms},
                      {"restore_ms", report.restore_ms}};
    }
    out << j.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = std::numeric_limits<double>::max(), x_max = std::numeric_limits<double>::lowest();
  double y_min = x_min, y_max = x_max;
  for (const ChartSeries& s : series) {
    if (s.x.size() != s.y.size()) throw UsageError("chart series length mismatch");
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (x_min > x_max || y_min > y_max) throw UsageError("chart has no finite points");
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;

  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"25\" text-anchor=\"middle\" font-size=\"17\">"
      << title << "</text>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = x_min + (x_max - x_min) * i / kTicks;
    const double fy = y_min + (y_max - y_min) * i / kTicks;
    const double gx = px(fx), gy = py(fy);
    out << "<line x1=\"" << gx << "\" y1=\"" << kTop << "\" x2=\"" << gx << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"#ddd\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << gy << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << gy << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << gx << "\" y=\"" << kTop + plot_h + 20
        << "\" text-anchor=\"middle\">" << format_metric(fx) << "</text>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
        << format_metric(fy) << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"20\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << kTop + plot_h / 2 << ")\">"
      << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[si].x.size(); ++i) {
      if (!std::isfinite(series[si].y[i])) continue;
      out << px(series[si].x[i]) << ',' << py(series[si].y[i]) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 16 + 18 * static_cast<double>(si);
    out << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + plot_w - 120 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w - 112 << "\" y=\"" << ly + 4 << "\">"
        << series[si].label << "</text>\n";
  }
  out << "</svg>\n";
  write_file_atomic(path, out.str());
}

}  // namespace roiquant
