#include "etc_cbir/raster.hpp"

#include <algorithm>
#include <string>

#include "etc_cbir/error.hpp"

namespace etc_cbir {

namespace {

constexpr std::size_t kRowSamples = kBlockSize * kChannels;

using CompositionTable = std::array<std::array<Dihedral, kDihedralCount>, kDihedralCount>;

// Derived from the coordinate maps on a 2x2 square with distinct cells, which
// is enough to tell all eight symmetries apart.
constexpr CompositionTable build_composition_table() {
  CompositionTable table{};
  for (int a = 0; a < kDihedralCount; ++a) {
    for (int b = 0; b < kDihedralCount; ++b) {
      for (int c = 0; c < kDihedralCount; ++c) {
        bool same = true;
        for (int r = 0; r < 2 && same; ++r) {
          for (int col = 0; col < 2 && same; ++col) {
            // apply b then a: out(r,c) = b_in(a_src(r,c)) = in(b_src(a_src(r,c)))
            const Coord via_a = dihedral_source(dihedral_from_code(a), r, col, 2);
            const Coord via_ab = dihedral_source(dihedral_from_code(b), via_a.row, via_a.col, 2);
            same = via_ab == dihedral_source(dihedral_from_code(c), r, col, 2);
          }
        }
        if (same) {
          table[a][b] = dihedral_from_code(c);
          break;
        }
      }
    }
  }
  return table;
}

constexpr CompositionTable kComposition = build_composition_table();

}  // namespace

Raster::Raster(int width, int height, std::uint8_t fill)
    : width_(width),
      height_(height),
      samples_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::invalid_argument, "negative raster dimensions");
  }
}

Raster::Raster(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width < 0 || height < 0 ||
      samples_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::invalid_argument,
                "sample count does not match " + std::to_string(width) + "x" +
                    std::to_string(height) + "x3");
  }
}

Block Raster::block(std::size_t j) const {
  const BlockGrid g = grid();
  if (j >= g.count()) throw Error(ErrorCode::invalid_argument, "block index out of range");
  const int bx = static_cast<int>(j % g.cols) * kBlockSize;
  const int by = static_cast<int>(j / g.cols) * kBlockSize;
  Block out;
  for (int r = 0; r < kBlockSize; ++r) {
    const auto* src = &samples_[index(bx, by + r, 0)];
    std::copy(src, src + kRowSamples, out.begin() + r * kRowSamples);
  }
  return out;
}

void Raster::set_block(std::size_t j, const Block& b) {
  const BlockGrid g = grid();
  if (j >= g.count()) throw Error(ErrorCode::invalid_argument, "block index out of range");
  const int bx = static_cast<int>(j % g.cols) * kBlockSize;
  const int by = static_cast<int>(j / g.cols) * kBlockSize;
  for (int r = 0; r < kBlockSize; ++r) {
    std::copy(b.begin() + r * kRowSamples, b.begin() + (r + 1) * kRowSamples,
              &samples_[index(bx, by + r, 0)]);
  }
}

void require_block_aligned(const Raster& img) {
  if (img.width() == 0 || img.height() == 0 || !img.is_block_aligned()) {
    throw Error(ErrorCode::dimension_not_multiple_of_16,
                std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
}

Raster crop_to_block_multiple(const Raster& img) {
  if (img.width() < kBlockSize || img.height() < kBlockSize) {
    throw Error(ErrorCode::dimension_too_small,
                std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " is smaller than one 16x16 block");
  }
  if (img.is_block_aligned()) return img;
  const int w = img.width() / kBlockSize * kBlockSize;
  const int h = img.height() / kBlockSize * kBlockSize;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * kChannels);
  const auto src = img.samples();
  const std::size_t src_stride = static_cast<std::size_t>(img.width()) * kChannels;
  const std::size_t dst_stride = static_cast<std::size_t>(w) * kChannels;
  for (int y = 0; y < h; ++y) {
    std::copy_n(src.begin() + y * src_stride, dst_stride, out.begin() + y * dst_stride);
  }
  return Raster(w, h, std::move(out));
}

Dihedral compose(Dihedral a, Dihedral b) noexcept { return kComposition[code_of(a)][code_of(b)]; }

Dihedral inverse(Dihedral t) noexcept {
  for (int c = 0; c < kDihedralCount; ++c) {
    if (compose(t, dihedral_from_code(c)) == Dihedral::identity) return dihedral_from_code(c);
  }
  return Dihedral::identity;
}

Block apply_dihedral(const Block& block, Dihedral t) noexcept {
  if (t == Dihedral::identity) return block;
  Block out;
  for (int r = 0; r < kBlockSize; ++r) {
    for (int c = 0; c < kBlockSize; ++c) {
      const Coord s = dihedral_source(t, r, c, kBlockSize);
      const std::size_t dst = (static_cast<std::size_t>(r) * kBlockSize + c) * kChannels;
      const std::size_t src = (static_cast<std::size_t>(s.row) * kBlockSize + s.col) * kChannels;
      out[dst] = block[src];
      out[dst + 1] = block[src + 1];
      out[dst + 2] = block[src + 2];
    }
  }
  return out;
}

Block negate_block(const Block& block) noexcept {
  Block out;
  for (std::size_t i = 0; i < block.size(); ++i) out[i] = static_cast<std::uint8_t>(255 - block[i]);
  return out;
}

}  // namespace etc_cbir
