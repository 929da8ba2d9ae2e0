#include "roiquant/quant.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace roiquant {

const QuantTable& jpeg_luma_base() {
  static const QuantTable t = (QuantTable() <<
      16, 11, 10, 16, 24, 40, 51, 61,
      12, 12, 14, 19, 26, 58, 60, 55,
      14, 13, 16, 24, 40, 57, 69, 56,
      14, 17, 22, 29, 51, 87, 80, 62,
      18, 22, 37, 56, 68, 109, 103, 77,
      24, 35, 55, 64, 81, 104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101,
      72, 92, 95, 98, 112, 100, 103, 99).finished();
  return t;
}

const QuantTable& jpeg_chroma_base() {
  static const QuantTable t = (QuantTable() <<
      17, 18, 24, 47, 99, 99, 99, 99,
      18, 21, 26, 66, 99, 99, 99, 99,
      24, 26, 56, 99, 99, 99, 99, 99,
      47, 66, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99).finished();
  return t;
}

QuantTable scale_matrix(const QuantTable& base, int quality) {
  if (quality < 1 || quality > 100)
    throw UsageError("quality must be in [1, 100], got " + std::to_string(quality));
  const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable out;
  for (int i = 0; i < 64; ++i) {
    const int v = (base.data()[i] * s + 50) / 100;
    out.data()[i] = v < 1 ? 1 : (v > 255 ? 255 : v);
  }
  return out;
}

namespace {

// Gentler tables as the index grows; chroma strictly harsher than luma at the
// same index.
constexpr int kLumaQuality[4] = {20, 35, 50, 70};
constexpr int kChromaQuality[4] = {10, 20, 35, 50};

void check_table(const QuantTable& t, const std::string& name) {
  for (int i = 0; i < 64; ++i)
    if (t.data()[i] < 1 || t.data()[i] > 255)
      throw UsageError("bank table " + name + " has entry " + std::to_string(t.data()[i]) +
                       " outside [1, 255]");
}

}  // namespace

MatrixBank MatrixBank::standard() {
  MatrixBank bank;
  for (int k = 0; k < 4; ++k) {
    bank.luma[k] = scale_matrix(jpeg_luma_base(), kLumaQuality[k]);
    bank.chroma[k] = scale_matrix(jpeg_chroma_base(), kChromaQuality[k]);
  }
  return bank;
}

MatrixBank MatrixBank::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bank file: " + path);

  auto fail = [&](long line, const std::string& msg) {
    throw UsageError(path + ":" + std::to_string(line) + ": " + msg);
  };

  std::map<std::string, QuantTable> entries;
  std::map<std::string, int> qualities;  // quality-generated entries, for ordering checks
  std::string raw;
  long lineno = 0;

  auto next_content_line = [&](std::string& out_line) -> bool {
    while (std::getline(in, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
      std::istringstream probe(body);
      std::string tok;
      if (probe >> tok) {
        out_line = body;
        return true;
      }
    }
    return false;
  };

  std::string line;
  while (next_content_line(line)) {
    std::istringstream ls(line);
    std::string name, kind;
    ls >> name >> kind;
    const bool is_luma = name.size() == 2 && name[0] == 'L';
    const bool is_chroma = name.size() == 2 && name[0] == 'C';
    if ((!is_luma && !is_chroma) || name[1] < '0' || name[1] > '3')
      fail(lineno, "expected a matrix name L0..L3 or C0..C3, got '" + name + "'");
    if (entries.count(name)) fail(lineno, "duplicate entry " + name);

    if (kind == "quality") {
      std::string base;
      int q = 0;
      if (!(ls >> base >> q)) fail(lineno, "expected '<name> quality <luma|chroma> <1..100>'");
      if (base != "luma" && base != "chroma") fail(lineno, "base must be 'luma' or 'chroma'");
      if (q < 1 || q > 100) fail(lineno, "quality out of range [1, 100]");
      entries[name] = scale_matrix(base == "luma" ? jpeg_luma_base() : jpeg_chroma_base(), q);
      qualities[name] = q;
    } else if (kind == "table") {
      QuantTable t;
      for (int r = 0; r < 8; ++r) {
        std::string row;
        if (!next_content_line(row)) fail(lineno, "table " + name + " truncated");
        std::istringstream rs(row);
        for (int c = 0; c < 8; ++c)
          if (!(rs >> t(r, c))) fail(lineno, "expected 8 integers in table row");
        std::string extra;
        if (rs >> extra) fail(lineno, "trailing data in table row");
      }
      try {
        check_table(t, name);
      } catch (const UsageError& e) {
        fail(lineno, e.what());
      }
      entries[name] = t;
    } else {
      fail(lineno, "expected 'quality' or 'table' after the matrix name");
    }
  }

  MatrixBank bank;
  for (int k = 0; k < 4; ++k) {
    const std::string ln = "L" + std::to_string(k);
    const std::string cn = "C" + std::to_string(k);
    auto li = entries.find(ln);
    auto ci = entries.find(cn);
    if (li == entries.end()) throw UsageError(path + ": missing entry " + ln);
    if (ci == entries.end()) throw UsageError(path + ": missing entry " + cn);
    bank.luma[k] = li->second;
    bank.chroma[k] = ci->second;
  }
  // Ordering is only checkable for quality-generated entries.
  for (int k = 0; k < 3; ++k) {
    const std::string a = "L" + std::to_string(k), b = "L" + std::to_string(k + 1);
    if (qualities.count(a) && qualities.count(b) && qualities[a] >= qualities[b])
      throw UsageError(path + ": quality(" + a + ") must be < quality(" + b + ")");
  }
  for (int k = 0; k < 4; ++k) {
    const std::string l = "L" + std::to_string(k), c = "C" + std::to_string(k);
    if (qualities.count(l) && qualities.count(c) && qualities[c] >= qualities[l])
      throw UsageError(path + ": quality(" + c + ") must be < quality(" + l + ")");
  }
  return bank;
}

int select_level(long frame_area, long object_area) {
  if (frame_area <= 0) throw UsageError("frame area must be positive");
  if (object_area < 0 || object_area > frame_area)
    throw UsageError("object area must be within [0, frame area]");
  const double background = static_cast<double>(frame_area - object_area) / frame_area;
  return static_cast<int>(round_away(3.0 * background));
}

CoeffBlock quantize(const Block8& freq, const QuantTable& q) {
  CoeffBlock out;
  for (int i = 0; i < 64; ++i)
    out.data()[i] = static_cast<int>(round_away(freq.data()[i] / q.data()[i]));
  return out;
}

Block8 dequantize(const CoeffBlock& coeffs, const QuantTable& q) {
  return coeffs.cast<double>().cwiseProduct(q.cast<double>());
}

double zero_fraction(const CoeffBlock& coeffs) {
  int zeros = 0;
  for (int i = 0; i < 64; ++i)
    if (coeffs.data()[i] == 0) ++zeros;
  return zeros / 64.0;
}

}  // namespace roiquant
