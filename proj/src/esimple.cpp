#include "etc_cbir/esimple.hpp"

#include <cmath>

#include "etc_cbir/parallel.hpp"

namespace etc_cbir {

std::vector<std::uint32_t> histogram(const Raster& img, const Codebook& cb) {
  require_block_aligned(img);
  std::vector<std::uint32_t> counts(cb.size(), 0);
  for (std::size_t j = 0; j < img.grid().count(); ++j) {
    const PatchDescriptor d = mcedd(img.block(j), cb.params());
    ++counts[cb.nearest_word(d)];
  }
  return counts;
}

std::vector<double> weight(std::span<const std::uint32_t> counts) {
  std::vector<double> out(counts.size(), 0.0);
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] > 0) out[m] = 1.0 + std::log(static_cast<double>(counts[m]));
  }
  return out;
}

std::vector<double> l2_normalize(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) sum += x * x;
  std::vector<double> out(v.begin(), v.end());
  if (!(sum > 0.0)) return out;
  const double norm = std::sqrt(sum);
  for (double& x : out) x /= norm;
  return out;
}

ESimpleVector esimple(const Raster& img, const Codebook& cb) {
  const auto counts = histogram(img, cb);
  return {l2_normalize(weight(counts)), cb.id()};
}

std::vector<ESimpleVector> esimple_batch(std::span<const Raster> images, const Codebook& cb,
                                         unsigned threads) {
  std::vector<ESimpleVector> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { out[i] = esimple(images[i], cb); });
  return out;
}

}  // namespace etc_cbir
