#include "grit/geometry.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace grit {

bool PixelBox::valid() const {
  for (double v : {x1, y1, x2, y2}) {
    if (!std::isfinite(v) || v < 0) return false;
  }
  return x1 <= x2 && y1 <= y2;
}

double iou(const PixelBox& a, const PixelBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms(std::span<const ScoredBox> candidates,
                             double overlap_threshold) {
  if (!(overlap_threshold > 0 && overlap_threshold <= 1)) {
    throw std::invalid_argument("nms: overlap threshold must be in (0, 1]");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // stable_sort keeps lower indices first among equal scores.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t lhs, std::size_t rhs) {
                     return candidates[lhs].score > candidates[rhs].score;
                   });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const PixelBox& box = candidates[idx].box;
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
          return iou(candidates[k].box, box) >= overlap_threshold;
        });
    if (!suppressed) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace grit
