#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace etc_cbir {

inline constexpr int kBlockSize = 16;
inline constexpr int kChannels = 3;
inline constexpr std::size_t kBlockSamples = kBlockSize * kBlockSize * kChannels;

/// One 16x16 RGB block, row-major, channels interleaved.
using Block = std::array<std::uint8_t, kBlockSamples>;

/// Grid of non-overlapping 16x16 blocks covering the top-left
/// 16*cols x 16*rows region of an image. Blocks are indexed row-major.
struct BlockGrid {
  int cols = 0;
  int rows = 0;

  std::size_t count() const noexcept { return static_cast<std::size_t>(cols) * rows; }
  bool operator==(const BlockGrid&) const = default;
};

/// 8-bit RGB image, row-major, channels interleaved in R,G,B order.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, std::uint8_t fill = 0);
  Raster(int width, int height, std::vector<std::uint8_t> samples);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return samples_.empty(); }

  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::span<std::uint8_t> samples() noexcept { return samples_; }

  std::uint8_t at(int x, int y, int channel) const noexcept {
    return samples_[index(x, y, channel)];
  }
  std::uint8_t& at(int x, int y, int channel) noexcept { return samples_[index(x, y, channel)]; }

  BlockGrid grid() const noexcept { return {width_ / kBlockSize, height_ / kBlockSize}; }
  bool is_block_aligned() const noexcept {
    return width_ % kBlockSize == 0 && height_ % kBlockSize == 0;
  }

  Block block(std::size_t j) const;
  void set_block(std::size_t j, const Block& b);

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y, int channel) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + channel;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// Throws dimension_not_multiple_of_16 unless both sides are multiples of 16
/// (and non-zero).
void require_block_aligned(const Raster& img);

/// Top-left 16*floor(W/16) x 16*floor(H/16) sub-image.
Raster crop_to_block_multiple(const Raster& img);

/// The symmetries of a square block. Composite codes apply the rotation
/// first, then the horizontal flip. Rotations are clockwise.
enum class Dihedral : std::uint8_t {
  identity = 0,
  rot90cw = 1,
  rot180 = 2,
  rot270cw = 3,
  flip_h = 4,
  flip_h_rot90cw = 5,
  flip_h_rot180 = 6,
  flip_h_rot270cw = 7,
};

inline constexpr int kDihedralCount = 8;

constexpr Dihedral dihedral_from_code(int code) noexcept {
  return static_cast<Dihedral>(code & 7);
}
constexpr int code_of(Dihedral t) noexcept { return static_cast<int>(t); }

struct Coord {
  int row;
  int col;
  bool operator==(const Coord&) const = default;
};

/// For an n x n square, the input coordinate that lands on output (row, col)
/// under transform t.
constexpr Coord dihedral_source(Dihedral t, int row, int col, int n) noexcept {
  const int last = n - 1;
  switch (t) {
    case Dihedral::identity: return {row, col};
    case Dihedral::rot90cw: return {last - col, row};
    case Dihedral::rot180: return {last - row, last - col};
    case Dihedral::rot270cw: return {col, last - row};
    case Dihedral::flip_h: return {row, last - col};
    case Dihedral::flip_h_rot90cw: return {col, row};
    case Dihedral::flip_h_rot180: return {last - row, col};
    case Dihedral::flip_h_rot270cw: return {last - col, last - row};
  }
  return {row, col};
}

/// compose(a, b) is the single transform equal to applying b, then a.
Dihedral compose(Dihedral a, Dihedral b) noexcept;
Dihedral inverse(Dihedral t) noexcept;

Block apply_dihedral(const Block& block, Dihedral t) noexcept;

/// p -> 255 - p on every sample.
Block negate_block(const Block& block) noexcept;

}  // namespace etc_cbir
