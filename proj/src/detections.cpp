#include "roiquant/detections.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace roiquant {

namespace {

struct PlaneRect {
  int x0, y0, x1, y1;  // half-open
};

// Box footprint on plane `i` of the frame, in that plane's coordinates.
PlaneRect plane_rect(const Frame& frame, const BoundingBox& box, std::size_t i) {
  if (i > 0 && frame.subsampling == Subsampling::S420) {
    return {box.x / 2, box.y / 2, (box.x + box.w + 1) / 2, (box.y + box.h + 1) / 2};
  }
  return {box.x, box.y, box.x + box.w, box.y + box.h};
}

}  // namespace

Manifest parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest not found: " + path);

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed manifest JSON in " + path + ": " + e.what());
  }

  try {
    if (!doc.contains("version") || doc["version"].get<long>() != 1)
      throw UsageError("unknown manifest schema version in " + path);
    Manifest m;
    m.width = doc.at("width").get<int>();
    m.height = doc.at("height").get<int>();
    if (m.width <= 0 || m.height <= 0)
      throw UsageError("manifest frame dimensions must be positive: " + path);

    for (const auto& jframe : doc.value("frames", nlohmann::json::array())) {
      const long index = jframe.at("index").get<long>();
      if (index < 0) throw UsageError("negative frame index in " + path);
      DetectionSet& set = m.frames[index];  // duplicate indices merge
      set.frame_index = index;
      for (const auto& jbox : jframe.value("boxes", nlohmann::json::array())) {
        BoundingBox box;
        box.x = jbox.at("x").get<int>();
        box.y = jbox.at("y").get<int>();
        box.w = jbox.at("w").get<int>();
        box.h = jbox.at("h").get<int>();
        box.confidence = jbox.at("confidence").get<double>();
        box.label = jbox.value("label", std::string{});
        if (box.w <= 0 || box.h <= 0)
          throw UsageError("box with non-positive dimensions in " + path + " (frame " +
                           std::to_string(index) + ")");
        box = clip_box(box, m.width, m.height);
        if (box.w > 0 && box.h > 0) set.boxes.push_back(std::move(box));
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed manifest JSON in " + path + ": " + e.what());
  }
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["width"] = manifest.width;
  doc["height"] = manifest.height;
  doc["frames"] = nlohmann::ordered_json::array();
  for (const auto& [index, set] : manifest.frames) {
    nlohmann::ordered_json jframe;
    jframe["index"] = index;
    jframe["boxes"] = nlohmann::ordered_json::array();
    for (const auto& box : set.boxes) {
      jframe["boxes"].push_back({{"label", box.label},
                                 {"confidence", box.confidence},
                                 {"x", box.x},
                                 {"y", box.y},
                                 {"w", box.w},
                                 {"h", box.h}});
    }
    doc["frames"].push_back(std::move(jframe));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path);
}

BoundingBox clip_box(BoundingBox box, int frame_width, int frame_height) {
  const int x0 = std::max(box.x, 0);
  const int y0 = std::max(box.y, 0);
  const int x1 = std::min(box.x + box.w, frame_width);
  const int y1 = std::min(box.y + box.h, frame_height);
  box.x = x0;
  box.y = y0;
  box.w = std::max(x1 - x0, 0);
  box.h = std::max(y1 - y0, 0);
  return box;
}

BoundingBox align_box_to_blocks(BoundingBox box, int frame_width, int frame_height) {
  const int x0 = (box.x / 8) * 8;
  const int y0 = (box.y / 8) * 8;
  const int x1 = ((box.x + box.w + 7) / 8) * 8;
  const int y1 = ((box.y + box.h + 7) / 8) * 8;
  box.x = x0;
  box.y = y0;
  box.w = x1 - x0;
  box.h = y1 - y0;
  return clip_box(box, frame_width, frame_height);
}

DetectionSet filter_confidence(const DetectionSet& set, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw UsageError("confidence threshold must be in [0, 1]");
  DetectionSet out;
  out.frame_index = set.frame_index;
  for (const auto& box : set.boxes)
    if (box.confidence >= threshold) out.boxes.push_back(box);
  return out;
}

long union_area(const std::vector<BoundingBox>& boxes) {
  std::vector<int> xs;
  xs.reserve(boxes.size() * 2);
  for (const auto& b : boxes) {
    if (b.w <= 0 || b.h <= 0) continue;
    xs.push_back(b.x);
    xs.push_back(b.x + b.w);
  }
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  long area = 0;
  std::vector<std::pair<int, int>> spans;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const int x0 = xs[i], x1 = xs[i + 1];
    spans.clear();
    for (const auto& b : boxes) {
      if (b.w <= 0 || b.h <= 0) continue;
      if (b.x <= x0 && b.x + b.w >= x1) spans.emplace_back(b.y, b.y + b.h);
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    long covered = 0;
    int cur_lo = spans[0].first, cur_hi = spans[0].second;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first > cur_hi) {
        covered += cur_hi - cur_lo;
        cur_lo = spans[k].first;
        cur_hi = spans[k].second;
      } else {
        cur_hi = std::max(cur_hi, spans[k].second);
      }
    }
    covered += cur_hi - cur_lo;
    area += covered * static_cast<long>(x1 - x0);
  }
  return area;
}

std::vector<Patch> extract_patches(const Frame& frame, const DetectionSet& set) {
  std::vector<Patch> patches;
  patches.reserve(set.boxes.size());
  for (const auto& box : set.boxes) {
    if (box.w <= 0 || box.h <= 0) continue;
    if (box.x < 0 || box.y < 0 || box.x + box.w > frame.width || box.y + box.h > frame.height)
      throw UsageError("patch box extends past the frame; clip it first");
    Patch patch;
    patch.box = box;
    for (std::size_t i = 0; i < frame.planes.size(); ++i) {
      const PlaneRect r = plane_rect(frame, box, i);
      patch.pixels.push_back(frame.planes[i].block(r.y0, r.x0, r.y1 - r.y0, r.x1 - r.x0));
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

Frame restore_patches(Frame frame, const std::vector<Patch>& patches) {
  for (const auto& patch : patches) {
    if (patch.pixels.size() != frame.planes.size())
      throw UsageError("patch plane count does not match the frame");
    for (std::size_t i = 0; i < frame.planes.size(); ++i) {
      const PlaneRect r = plane_rect(frame, patch.box, i);
      const auto& px = patch.pixels[i];
      if (px.rows() != r.y1 - r.y0 || px.cols() != r.x1 - r.x0)
        throw UsageError("patch dimensions do not match the frame");
      frame.planes[i].block(r.y0, r.x0, px.rows(), px.cols()) = px;
    }
  }
  return frame;
}

}  // namespace roiquant
