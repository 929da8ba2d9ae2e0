#include "roiquant/sweep.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "roiquant/metrics.hpp"
#include "roiquant/report.hpp"

namespace fs = std::filesystem;

namespace roiquant {
namespace {

std::string substitute(std::string text,
                       const std::vector<std::pair<std::string, std::string>>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
      text.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return text;
}

std::string first_token(const std::string& command) {
  std::istringstream in(command);
  std::string tok;
  in >> tok;
  return tok;
}

// Runs the command through the shell with the given working directory;
// returns the exit status, or -1 when the child could not be started or died
// on a signal.
int run_command(const std::string& command, const std::string& workdir) {
  const pid_t pid = fork();
  if (pid < 0) return -1;
  if (pid == 0) {
    if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  int status = 0;
  if (waitpid(pid, &status, 0) != pid) return -1;
  if (!WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

bool is_executable_file(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return false;
  return access(p.c_str(), X_OK) == 0;
}

struct CellScore {
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  std::optional<double> roi_psnr;
  std::optional<double> roi_ms_ssim;
};

CellScore score_round_trip(const SweepConfig& config, const SequenceSpec& reference,
                           const std::string& encoded_path, const std::string& decoded_path) {
  CellScore score;
  score.bpp = bpp(fs::file_size(encoded_path), config.width, config.height,
                  reference.frame_count);

  SequenceSpec decoded = SequenceSpec::probe(decoded_path, config.width, config.height,
                                             config.format);
  if (decoded.frame_count != reference.frame_count)
    throw IoError("decoded frame count differs from the reference");

  double psnr_sum = 0.0, ssim_sum = 0.0;
  double roi_psnr_sum = 0.0, roi_ssim_sum = 0.0;
  long roi_frames = 0;
  for (long i = 0; i < reference.frame_count; ++i) {
    Frame ref = read_sequence(reference, i);
    Frame dist = read_sequence(decoded, i);
    psnr_sum += frame_psnr(ref, dist);
    ssim_sum += frame_ms_ssim(ref, dist).value;
    DetectionSet set = filter_confidence(config.manifest.for_frame(i),
                                         config.confidence_threshold);
    std::vector<BoundingBox> boxes;
    for (BoundingBox box : set.boxes) {
      box = clip_box(box, config.width, config.height);
      if (box.w > 0 && box.h > 0) boxes.push_back(box);
    }
    if (!boxes.empty()) {
      RoiMetrics roi = roi_metrics(ref, dist, boxes);
      roi_psnr_sum += roi.psnr;
      roi_ssim_sum += roi.ms_ssim;
      ++roi_frames;
    }
  }
  const double n = static_cast<double>(reference.frame_count);
  score.psnr = psnr_sum / n;
  score.ms_ssim = ssim_sum / n;
  if (roi_frames > 0) {
    score.roi_psnr = roi_psnr_sum / static_cast<double>(roi_frames);
    score.roi_ms_ssim = roi_ssim_sum / static_cast<double>(roi_frames);
  }
  return score;
}

}  // namespace

std::string find_executable(const std::string& name) {
  if (name.empty()) return {};
  if (name.find('/') != std::string::npos)
    return is_executable_file(name) ? name : std::string();
  const char* path_env = std::getenv("PATH");
  if (!path_env) return {};
  std::istringstream paths(path_env);
  std::string dir;
  while (std::getline(paths, dir, ':')) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(dir) / name;
    if (is_executable_file(candidate)) return candidate.string();
  }
  return {};
}

std::vector<EncoderTemplate> load_encoder_templates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("encoder template file not found: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("malformed encoder template JSON in " + path + ": " + e.what());
  }

  std::vector<EncoderTemplate> out;
  try {
    if (!doc.is_object() || doc.value("version", 0) != 1)
      throw UsageError("unknown encoder template schema version in " + path);
    for (const auto& entry : doc.at("encoders")) {
      EncoderTemplate t;
      t.name = entry.at("name").get<std::string>();
      if (t.name.empty()) throw UsageError("encoder with empty name in " + path);
      t.encode_cmd = entry.at("encode").get<std::string>();
      t.decode_cmd = entry.at("decode").get<std::string>();
      if (t.encode_cmd.empty() || t.decode_cmd.empty())
        throw UsageError("encoder " + t.name + " has an empty command in " + path);
      t.two_pass = entry.value("two_pass", false);
      t.extension = entry.value("extension", std::string("bin"));
      out.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed encoder template in " + path + ": " + e.what());
  }
  if (out.empty()) throw UsageError("no encoders defined in " + path);
  return out;
}

SweepResult run_sweep(const SweepConfig& config, std::ostream& log) {
  if (config.encoders.empty()) throw UsageError("sweep needs at least one encoder");
  if (config.bitrates_kbps.empty()) throw UsageError("sweep needs at least one bitrate");
  if (config.variants.empty()) throw UsageError("sweep needs at least one input variant");

  SequenceSpec reference = SequenceSpec::probe(config.reference_path, config.width,
                                               config.height, config.format);
  for (const SweepVariant& v : config.variants) {
    SequenceSpec spec = SequenceSpec::probe(v.path, config.width, config.height, config.format);
    if (spec.frame_count != reference.frame_count)
      throw UsageError("variant " + v.label + " frame count differs from the reference");
  }

  fs::path temp_root = config.temp_dir.empty() ? fs::temp_directory_path()
                                               : fs::path(config.temp_dir);
  fs::create_directories(temp_root);

  char fps_buf[32];
  std::snprintf(fps_buf, sizeof(fps_buf), "%g", config.fps);

  SweepResult result;
  for (const EncoderTemplate& encoder : config.encoders) {
    const bool available = !find_executable(first_token(encoder.encode_cmd)).empty() &&
                           !find_executable(first_token(encoder.decode_cmd)).empty();
    if (!available)
      log << "warning: encoder " << encoder.name
          << " not found on PATH, skipping its cells\n";

    for (int bitrate : config.bitrates_kbps) {
      for (const SweepVariant& variant : config.variants) {
        SweepCell cell;
        cell.encoder = encoder.name;
        cell.bitrate_kbps = bitrate;
        cell.variant = variant.label;
        if (!available) {
          cell.status = "skipped";
          result.any_skipped = true;
          result.cells.push_back(std::move(cell));
          continue;
        }

        const std::string stem =
            encoder.name + "_" + std::to_string(bitrate) + "_" + variant.label;
        fs::path cell_dir = temp_root / stem;
        fs::create_directories(cell_dir);
        const std::string encoded =
            fs::absolute(cell_dir / ("stream." + encoder.extension)).string();
        const std::string decoded = fs::absolute(cell_dir / "roundtrip.raw").string();

        const std::vector<std::pair<std::string, std::string>> common_vars = {
            {"bitrate", std::to_string(bitrate)},
            {"width", std::to_string(config.width)},
            {"height", std::to_string(config.height)},
            {"fps", fps_buf},
            {"format", pixel_format_name(config.format)},
        };

        bool ok = true;
        const int passes = encoder.two_pass ? 2 : 1;
        for (int pass = 1; pass <= passes && ok; ++pass) {
          auto vars = common_vars;
          vars.emplace_back("input", fs::absolute(variant.path).string());
          vars.emplace_back("output", encoded);
          vars.emplace_back("pass", std::to_string(pass));
          if (run_command(substitute(encoder.encode_cmd, vars), cell_dir.string()) != 0) {
            log << "warning: " << encoder.name << " encode failed for " << stem << "\n";
            ok = false;
          }
        }
        if (ok) {
          // the decode command sees the encoded stream as {input} and the
          // raw round trip as {output}
          auto vars = common_vars;
          vars.emplace_back("input", encoded);
          vars.emplace_back("output", decoded);
          vars.emplace_back("pass", "1");
          if (run_command(substitute(encoder.decode_cmd, vars), cell_dir.string()) != 0) {
            log << "warning: " << encoder.name << " decode failed for " << stem << "\n";
            ok = false;
          }
        }
        if (ok) {
          try {
            CellScore score = score_round_trip(config, reference, encoded, decoded);
            cell.status = "ok";
            cell.bpp = score.bpp;
            cell.psnr = score.psnr;
            cell.ms_ssim = score.ms_ssim;
            cell.roi_psnr = score.roi_psnr;
            cell.roi_ms_ssim = score.roi_ms_ssim;
          } catch (const std::exception& e) {
            log << "warning: scoring failed for " << stem << ": " << e.what() << "\n";
            ok = false;
          }
        }
        if (!ok) {
          cell.status = "failed";
          result.any_failed = true;
        }
        if (!config.keep_temps) {
          std::error_code ec;
          fs::remove_all(cell_dir, ec);
        }
        result.cells.push_back(std::move(cell));
      }
    }
  }
  if (!config.keep_temps) {
    std::error_code ec;
    fs::remove(temp_root, ec);  // only an empty root goes away
  }
  return result;
}

void write_sweep_csv(const std::string& path, const std::vector<std::string>& header_notes,
                     const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  for (const std::string& note : header_notes) out << "# " << note << "\n";
  for (const SweepCell& cell : cells) {
    if (cell.status == "skipped")
      out << "# skipped: " << cell.encoder << " bitrate=" << cell.bitrate_kbps
          << " variant=" << cell.variant << " (encoder not found)\n";
  }
  out << "encoder,bitrate_kbps,variant,status,bpp,psnr,ms_ssim,roi_psnr,roi_ms_ssim\n";
  auto cell_text = [](const std::optional<double>& v) {
    return v ? format_metric(*v) : std::string();
  };
  for (const SweepCell& cell : cells) {
    if (cell.status == "skipped") continue;
    out << cell.encoder << ',' << cell.bitrate_kbps << ',' << cell.variant << ','
        << cell.status << ',' << cell_text(cell.bpp) << ',' << cell_text(cell.psnr) << ','
        << cell_text(cell.ms_ssim) << ',' << cell_text(cell.roi_psnr) << ','
        << cell_text(cell.roi_ms_ssim) << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace roiquant
