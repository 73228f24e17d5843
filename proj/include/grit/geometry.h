#ifndef GRIT_GEOMETRY_H_
#define GRIT_GEOMETRY_H_

#include <cstddef>
#include <span>
#include <vector>

namespace grit {

// Axis-aligned box in continuous pixel coordinates. Origin is the top-left
// corner of the image, x grows rightward and y downward.
struct PixelBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  // Finite, non-negative, and x1 <= x2, y1 <= y2.
  bool valid() const;
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct ScoredBox {
  PixelBox box;
  double score = 0;     // detector confidence in [0, 1]
  int chunk_index = 0;  // noun chunk the detection was produced for
};

// Area of intersection over area of union. Returns 0 when the union is empty.
double iou(const PixelBox& a, const PixelBox& b);

// Greedy non-maximum suppression over all candidates jointly; chunk_index is
// ignored, so a box can suppress boxes found for a different noun chunk.
// Candidates are visited by descending score (ties: lower input index first)
// and kept iff their IoU with every kept box is below overlap_threshold.
// Returns kept indices in ascending input order.
std::vector<std::size_t> nms(std::span<const ScoredBox> candidates,
                             double overlap_threshold);

}  // namespace grit

#endif  // GRIT_GEOMETRY_H_
