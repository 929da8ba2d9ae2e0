#pragma once

#include <map>
#include <string>
#include <vector>

#include "roiquant/types.hpp"

namespace roiquant {

/// Axis-aligned box in luma pixel coordinates, top-left origin.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double confidence = 1.0;
  std::string label;
};

struct DetectionSet {
  long frame_index = 0;
  std::vector<BoundingBox> boxes;
};

/// Sidecar manifest replacing an in-process detector. Boxes are stored
/// clipped to the frame bounds; frames absent from the manifest read back as
/// empty sets.
struct Manifest {
  int width = 0;
  int height = 0;
  std::map<long, DetectionSet> frames;

  DetectionSet for_frame(long index) const {
    auto it = frames.find(index);
    if (it != frames.end()) return it->second;
    return DetectionSet{index, {}};
  }
};

Manifest parse_manifest(const std::string& path);
void write_manifest(const Manifest& manifest, const std::string& path);

/// Intersects the box with [0,w) x [0,h). The result may be empty (w or h 0).
BoundingBox clip_box(BoundingBox box, int frame_width, int frame_height);

/// Grows the box outward to 8-pixel multiples, then clips to the frame.
BoundingBox align_box_to_blocks(BoundingBox box, int frame_width, int frame_height);

/// Keeps boxes with confidence >= threshold.
DetectionSet filter_confidence(const DetectionSet& set, double threshold);

/// Exact area of the union of the boxes (coordinate-compression sweep).
long union_area(const std::vector<BoundingBox>& boxes);

/// Saved samples of every plane under a box; chroma rectangles are the
/// subsampling-scaled cover floor(x/2) .. ceil((x+w)/2).
struct Patch {
  BoundingBox box;
  std::vector<BytePlane> pixels;
};

std::vector<Patch> extract_patches(const Frame& frame, const DetectionSet& set);

/// Writes saved samples back over the frame; later patches win on overlap.
Frame restore_patches(Frame frame, const std::vector<Patch>& patches);

}  // namespace roiquant
