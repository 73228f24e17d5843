#ifndef GRIT_LOCGRID_H_
#define GRIT_LOCGRID_H_

#include "grit/geometry.h"

namespace grit {

struct ImageDims {
  int width = 224;
  int height = 224;

  bool valid() const { return width > 0 && height > 0; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// P x P grid over the image; the location vocabulary has P*P tokens.
struct GridSpec {
  int bins = 32;

  int vocab_size() const { return bins * bins; }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Index of one grid cell, row-major and zero-based: index = row * P + col.
struct LocToken {
  int index = 0;

  friend auto operator<=>(const LocToken&, const LocToken&) = default;
};

struct GridCell {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

// A box discretized to its top-left and bottom-right cells.
struct TokenBoxPair {
  LocToken tl;
  LocToken br;

  friend bool operator==(const TokenBoxPair&, const TokenBoxPair&) = default;
};

// Throws std::out_of_range when row or col is outside [0, P).
LocToken token_of_cell(int row, int col, const GridSpec& grid);
// Throws std::out_of_range when the index is outside [0, P*P).
GridCell cell_of_token(LocToken token, const GridSpec& grid);

bool in_vocab(LocToken token, const GridSpec& grid);
// Both tokens in range and tl is neither below nor right of br.
bool well_ordered(const TokenBoxPair& pair, const GridSpec& grid);

// Maps each corner to the bin containing it; coordinates outside the image
// clamp into the border bins, so x == W lands in the last column.
TokenBoxPair quantize_box(const PixelBox& box, const ImageDims& dims,
                          const GridSpec& grid);

// Corners are placed at the centers of their cells.
PixelBox dequantize_box(const TokenBoxPair& pair, const ImageDims& dims,
                        const GridSpec& grid);

}  // namespace grit

#endif  // GRIT_LOCGRID_H_
