// Reference implementations used only by tests. They are written from the
// definitions, independently of the library code they check.
#ifndef GRIT_TESTS_ORACLES_H_
#define GRIT_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Box = std::array<double, 4>;  // x1, y1, x2, y2

// IoU by counting the centers of a fine raster that fall inside each box.
// Exact for boxes whose coordinates are multiples of `step`.
inline double raster_iou(const Box& a, const Box& b, double step) {
  const double lo_x = std::min(a[0], b[0]), hi_x = std::max(a[2], b[2]);
  const double lo_y = std::min(a[1], b[1]), hi_y = std::max(a[3], b[3]);
  auto inside = [](const Box& box, double x, double y) {
    return x > box[0] && x < box[2] && y > box[1] && y < box[3];
  };
  long in_a = 0, in_b = 0, in_both = 0;
  for (double x = lo_x + step / 2; x < hi_x; x += step) {
    for (double y = lo_y + step / 2; y < hi_y; y += step) {
      const bool ia = inside(a, x, y), ib = inside(b, x, y);
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

// Analytic IoU written out separately from the library version.
inline double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
  const double iy = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
  const double inter = ix * iy;
  const double area_a = (a[2] - a[0]) * (a[3] - a[1]);
  const double area_b = (b[2] - b[0]) * (b[3] - b[1]);
  const double uni = area_a + area_b - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

struct Candidate {
  Box box;
  double score;
  int chunk;
};

// O(n^2) greedy suppression: repeatedly take the best remaining candidate
// (lowest index on ties) and delete everything overlapping it.
inline std::vector<std::size_t> nms(const std::vector<Candidate>& c, double thr) {
  std::vector<char> alive(c.size(), 1);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t best = c.size();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (alive[i] && (best == c.size() || c[i].score > c[best].score)) best = i;
    }
    if (best == c.size()) break;
    kept.push_back(best);
    alive[best] = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (alive[i] && iou(c[i].box, c[best].box) >= thr) alive[i] = 0;
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Bin of a coordinate found by walking the bin edges k * extent / bins.
inline int scan_bin(double coord, int extent, int bins) {
  int bin = 0;
  for (int k = 1; k < bins; ++k) {
    if (coord >= static_cast<double>(k) * extent / bins) bin = k;
  }
  return bin;
}

inline int scan_token(double x, double y, int w, int h, int bins) {
  return scan_bin(y, h, bins) * bins + scan_bin(x, w, bins);
}

inline Box cell_center_box(int tl, int br, int w, int h, int bins) {
  const double bw = static_cast<double>(w) / bins, bh = static_cast<double>(h) / bins;
  return {(tl % bins + 0.5) * bw, (tl / bins + 0.5) * bh, (br % bins + 0.5) * bw,
          (br / bins + 0.5) * bh};
}

// Hit test from known token pairs: dequantize to cell centers, compare the
// first min(k, n) boxes with every gold box. Malformed or empty is a miss.
inline bool any_box_hit(const std::vector<std::pair<int, int>>& written, bool malformed,
                        const std::vector<Box>& gold, int k, int w, int h, int bins,
                        double thr) {
  if (malformed || written.empty()) return false;
  const int take = std::min<int>(k, static_cast<int>(written.size()));
  for (int i = 0; i < take; ++i) {
    const Box b = cell_center_box(written[i].first, written[i].second, w, h, bins);
    for (const Box& g : gold) {
      if (iou(b, g) > thr) return true;
    }
  }
  return false;
}

inline std::size_t words(const std::string& s) {
  std::size_t n = 0;
  bool in = false;
  for (char c : s) {
    const bool sp = c == ' ' || c == '\t' || c == '\n';
    if (!sp && !in) ++n;
    in = !sp;
  }
  return n;
}

}  // namespace oracle

#endif  // GRIT_TESTS_ORACLES_H_
