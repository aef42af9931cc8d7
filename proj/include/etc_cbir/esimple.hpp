#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "etc_cbir/codebook.hpp"
#include "etc_cbir/raster.hpp"

namespace etc_cbir {

/// Weighted, l2-normalized visual-word histogram of one image.
struct ESimpleVector {
  std::vector<double> values;
  std::uint64_t codebook_id = 0;

  bool operator==(const ESimpleVector&) const = default;
};

/// counts[m] = number of patches whose nearest word is m.
std::vector<std::uint32_t> histogram(const Raster& img, const Codebook& cb);

/// 1 + ln(count) for non-zero counts, 0 for empty bins.
std::vector<double> weight(std::span<const std::uint32_t> counts);

/// v / ||v||_2; the zero vector stays zero.
std::vector<double> l2_normalize(std::span<const double> v);

ESimpleVector esimple(const Raster& img, const Codebook& cb);

/// esimple over many images; output order follows input order.
std::vector<ESimpleVector> esimple_batch(std::span<const Raster> images, const Codebook& cb,
                                         unsigned threads = 0);

}  // namespace etc_cbir
