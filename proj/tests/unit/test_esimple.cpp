#include <doctest.h>

#include <cmath>

#include "etc_cbir/error.hpp"
#include "etc_cbir/esimple.hpp"
#include "etc_cbir/etc_crypto.hpp"
#include "etc_cbir/splitmix64.hpp"
#include "synthetic.hpp"

using namespace etc_cbir;

namespace {

Block solid(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Block out;
  for (std::size_t i = 0; i < out.size(); i += 3) {
    out[i] = r;
    out[i + 1] = g;
    out[i + 2] = b;
  }
  return out;
}

Codebook codebook_from_patches(const std::vector<Block>& patches) {
  FeatureMatrix words(static_cast<std::size_t>(kDescriptorDim));
  for (const Block& p : patches) {
    const PatchDescriptor d = mcedd(p);
    words.append(d);
  }
  return Codebook(std::move(words), {}, {"patches", 0, 0, 0});
}

Codebook synthetic_codebook(std::size_t m, std::uint64_t seed) {
  return build_codebook(testing::training_scenes(12, seed), {m, seed, 30, 1e-6, 0}, {}, "scenes");
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("histogram counts nearest words per patch") {
  const Block a = solid(200, 30, 30);
  const Block b = solid(30, 200, 30);
  const Block c = solid(30, 30, 200);
  const Codebook cb = codebook_from_patches({a, b, c, solid(128, 128, 128)});
  Raster img(32, 32);
  img.set_block(0, a);
  img.set_block(1, a);
  img.set_block(2, c);
  img.set_block(3, b);
  CHECK(histogram(img, cb) == std::vector<std::uint32_t>{2, 1, 1, 0});

  Raster single(16, 16);
  single.set_block(0, c);
  CHECK(histogram(single, cb) == std::vector<std::uint32_t>{0, 0, 1, 0});
  const ESimpleVector v = esimple(single, cb);
  CHECK(v.values == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  CHECK(v.codebook_id == cb.id());
}

TEST_CASE("histogram requires block-aligned images") {
  const Codebook cb = codebook_from_patches({solid(1, 2, 3)});
  try {
    histogram(Raster(20, 16), cb);
    FAIL("expected dimension-not-multiple-of-16");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_not_multiple_of_16);
  }
}

TEST_CASE("weight applies 1 + ln(count) with empty bins at zero") {
  const std::vector<std::uint32_t> counts = {1, 0, 10, 3};
  const auto w = weight(counts);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);
  CHECK(w[2] == doctest::Approx(3.302585092994046).epsilon(1e-15));
  CHECK(w[3] == doctest::Approx(1.0 + std::log(3.0)));
  // monotone in the count
  for (std::uint32_t a = 2; a < 200; ++a) {
    const std::vector<std::uint32_t> pair = {a - 1, a};
    const auto wp = weight(pair);
    CHECK(wp[1] > wp[0]);
  }
}

TEST_CASE("l2_normalize") {
  CHECK(l2_normalize(std::vector<double>{3, 4}) == std::vector<double>{0.6, 0.8});
  CHECK(l2_normalize(std::vector<double>{0, 1, 0}) == std::vector<double>{0, 1, 0});
  CHECK(l2_normalize(std::vector<double>{0, 0}) == std::vector<double>{0, 0});
}

TEST_CASE("esimple is invariant under encryption") {
  const Codebook cb = synthetic_codebook(16, 5);
  SplitMix64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Raster img = trial % 2 ? testing::tiled_image(64, 48, rng) : testing::noise_image(48, 64, rng);
    const KeySet k = keygen(rng.next());
    CHECK(histogram(encrypt(img, k), cb) == histogram(img, cb));
    const ESimpleVector plain = esimple(img, cb);
    const ESimpleVector enc = esimple(encrypt(img, k), cb);
    CHECK(max_abs_diff(plain.values, enc.values) < 1e-9);
    CHECK(std::abs(norm(plain.values) - 1.0) < 1e-9);
  }
}

TEST_CASE("esimple ignores block order") {
  const Codebook cb = synthetic_codebook(16, 7);
  SplitMix64 rng(8);
  const Raster img = testing::tiled_image(64, 64, rng);
  Raster shuffled(64, 64);
  const std::size_t n = img.grid().count();
  for (std::size_t j = 0; j < n; ++j) shuffled.set_block((j * 5 + 3) % n, img.block(j));
  CHECK(max_abs_diff(esimple(img, cb).values, esimple(shuffled, cb).values) < 1e-9);
}

TEST_CASE("esimple_batch matches per-image esimple") {
  const Codebook cb = synthetic_codebook(8, 9);
  SplitMix64 rng(10);
  std::vector<Raster> imgs;
  for (int i = 0; i < 5; ++i) imgs.push_back(testing::tiled_image(32, 48, rng));
  const auto batch = esimple_batch(imgs, cb, 3);
  for (std::size_t i = 0; i < imgs.size(); ++i) CHECK(batch[i] == esimple(imgs[i], cb));
}
