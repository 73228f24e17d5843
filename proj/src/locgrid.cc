#include "grit/locgrid.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grit {
namespace {

void check_grid(const GridSpec& grid) {
  if (grid.bins < 1) throw std::invalid_argument("grid must have at least one bin");
}

void check_dims(const ImageDims& dims) {
  if (!dims.valid()) {
    throw std::invalid_argument("image dims must be positive, got " +
                                std::to_string(dims.width) + "x" +
                                std::to_string(dims.height));
  }
}

int bin_of(double coord, int extent, int bins) {
  const double scaled = std::floor(coord * bins / extent);
  if (!(scaled >= 0)) return 0;  // also catches NaN
  if (scaled >= bins) return bins - 1;
  return static_cast<int>(scaled);
}

}  // namespace

LocToken token_of_cell(int row, int col, const GridSpec& grid) {
  check_grid(grid);
  if (row < 0 || row >= grid.bins || col < 0 || col >= grid.bins) {
    throw std::out_of_range("cell (" + std::to_string(row) + ", " +
                            std::to_string(col) + ") outside " +
                            std::to_string(grid.bins) + "x" +
                            std::to_string(grid.bins) + " grid");
  }
  return LocToken{row * grid.bins + col};
}

GridCell cell_of_token(LocToken token, const GridSpec& grid) {
  check_grid(grid);
  if (!in_vocab(token, grid)) {
    throw std::out_of_range("location token " + std::to_string(token.index) +
                            " outside vocabulary of " +
                            std::to_string(grid.vocab_size()));
  }
  return GridCell{token.index / grid.bins, token.index % grid.bins};
}

bool in_vocab(LocToken token, const GridSpec& grid) {
  return token.index >= 0 && token.index < grid.vocab_size();
}

bool well_ordered(const TokenBoxPair& pair, const GridSpec& grid) {
  if (!in_vocab(pair.tl, grid) || !in_vocab(pair.br, grid)) return false;
  const GridCell tl = cell_of_token(pair.tl, grid);
  const GridCell br = cell_of_token(pair.br, grid);
  return tl.row <= br.row && tl.col <= br.col;
}

TokenBoxPair quantize_box(const PixelBox& box, const ImageDims& dims,
                          const GridSpec& grid) {
  check_grid(grid);
  check_dims(dims);
  const int P = grid.bins;
  return TokenBoxPair{
      LocToken{bin_of(box.y1, dims.height, P) * P + bin_of(box.x1, dims.width, P)},
      LocToken{bin_of(box.y2, dims.height, P) * P + bin_of(box.x2, dims.width, P)},
  };
}

PixelBox dequantize_box(const TokenBoxPair& pair, const ImageDims& dims,
                        const GridSpec& grid) {
  check_dims(dims);
  const GridCell tl = cell_of_token(pair.tl, grid);
  const GridCell br = cell_of_token(pair.br, grid);
  const double bin_w = static_cast<double>(dims.width) / grid.bins;
  const double bin_h = static_cast<double>(dims.height) / grid.bins;
  return PixelBox{(tl.col + 0.5) * bin_w, (tl.row + 0.5) * bin_h,
                  (br.col + 0.5) * bin_w, (br.row + 0.5) * bin_h};
}

}  // namespace grit
