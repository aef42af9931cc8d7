#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "etc_cbir/error.hpp"
#include "etc_cbir/retrieval_index.hpp"
#include "etc_cbir/splitmix64.hpp"

using namespace etc_cbir;

namespace {

constexpr std::uint64_t kCb = 1234;

ESimpleVector vec(std::vector<double> v, std::uint64_t cb = kCb) { return {std::move(v), cb}; }

ErrorCode failure_code(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

RetrievalIndex random_index(SplitMix64& rng, std::size_t n, std::size_t dim) {
  RetrievalIndex index(dim, kCb);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.unit();
    index.add({"img" + std::to_string(i), vec(v), "owner " + std::to_string(i % 7), "/store/" + std::to_string(i)});
  }
  return index;
}

}  // namespace

TEST_CASE("add and get") {
  RetrievalIndex index(2, kCb);
  const IndexEntry e{"a", vec({1, 0}), "alice", "/x/a.png"};
  index.add(e);
  CHECK(index.get("a") == e);
  CHECK_FALSE(index.get("b").has_value());
  CHECK(failure_code([&] { index.add(e); }) == ErrorCode::duplicate_id);
  CHECK(failure_code([&] { index.add({"c", vec({1, 0}, 99), "", ""}); }) == ErrorCode::codebook_mismatch);
  CHECK(failure_code([&] { index.add({"c", vec({1, 0, 0}), "", ""}); }) == ErrorCode::dimension_mismatch);
  CHECK(failure_code([&] { index.add({"c\td", vec({1, 0}), "", ""}); }) == ErrorCode::invalid_field);
  CHECK(failure_code([&] { index.add({"", vec({1, 0}), "", ""}); }) == ErrorCode::invalid_field);
  CHECK(index.size() == 1);
}

TEST_CASE("query ranks by distance then id") {
  RetrievalIndex index(2, kCb);
  index.add({"e2", vec({0, 1}), "", ""});
  index.add({"e1", vec({1, 0}), "", ""});
  auto r = index.query(vec({1, 0}), 1);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == RankedResult{"e1", 0.0, 1});

  // equidistant query: lower id first
  r = index.query(vec({0.5, 0.5}), 2);
  REQUIRE(r.size() == 2);
  CHECK(r[0].image_id == "e1");
  CHECK(r[1].image_id == "e2");
  CHECK(r[0].distance == r[1].distance);
  CHECK(r[1].rank == 2);

  r = index.query(vec({0, 1}), 10);
  CHECK(r.size() == 2);
  CHECK(r[0].image_id == "e2");
  CHECK(r[1].distance == doctest::Approx(std::sqrt(2.0)));

  CHECK(failure_code([&] { index.query(vec({1, 0}, 7), 1); }) == ErrorCode::codebook_mismatch);
  CHECK_THROWS_AS(index.query(vec({1, 0}), 0), Error);
  CHECK(RetrievalIndex(2, kCb).query(vec({1, 0}), 3).empty());
}

TEST_CASE("query equals an independent full-scan sort") {
  SplitMix64 rng(17);
  const RetrievalIndex index = random_index(rng, 1000, 8);
  const auto entries = index.entries();
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> q(8);
    for (double& x : q) x = rng.unit();
    std::vector<std::pair<double, std::string>> scan;
    for (const auto& e : entries) {
      double s = 0.0;
      for (int d = 0; d < 8; ++d) s += (q[d] - e.vector.values[d]) * (q[d] - e.vector.values[d]);
      scan.emplace_back(std::sqrt(s), e.image_id);
    }
    std::sort(scan.begin(), scan.end());
    const std::size_t k = 1 + rng.below(1000);
    const auto r = index.query(vec(q), k);
    REQUIRE(r.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(r[i].image_id == scan[i].second);
      CHECK(r[i].distance == scan[i].first);
      CHECK(r[i].rank == i + 1);
    }
    CHECK(index.query(vec(q), k) == r);
  }
}

TEST_CASE("stored vectors retrieve themselves") {
  SplitMix64 rng(18);
  const RetrievalIndex index = random_index(rng, 50, 5);
  for (const auto& e : index.entries()) {
    const auto r = index.query(e.vector, 1);
    CHECK(r[0].image_id == e.image_id);
    CHECK(r[0].distance < 1e-9);
  }
}

TEST_CASE("index file round-trips bit-exactly") {
  SplitMix64 rng(19);
  const RetrievalIndex index = random_index(rng, 100, 12);
  const std::string text = index.serialize();
  CHECK(text.rfind("ESIMPLE-INDEX v1 M=12 CB=1234 N=100\n", 0) == 0);
  const RetrievalIndex back = RetrievalIndex::parse(text);
  CHECK(back.entries() == index.entries());
  CHECK(back.codebook_id() == kCb);

  const auto path = std::filesystem::temp_directory_path() / "etc_cbir_test_index.txt";
  index.save(path);
  CHECK(RetrievalIndex::load(path).entries() == index.entries());
  std::filesystem::remove(path);

  RetrievalIndex with_empty_owner(2, kCb);
  with_empty_owner.add({"x", vec({0.25, -0.0}), "", ""});
  CHECK(RetrievalIndex::parse(with_empty_owner.serialize()).entries() == with_empty_owner.entries());
}

TEST_CASE("index parse errors") {
  SplitMix64 rng(20);
  const std::string text = random_index(rng, 3, 4).serialize();
  CHECK(failure_code([&] { RetrievalIndex::parse("ESIMPLE-INDEX v2 M=4 CB=1 N=0\n"); }) ==
        ErrorCode::format_version_mismatch);
  CHECK(failure_code([&] { RetrievalIndex::parse("hello\n"); }) == ErrorCode::format_version_mismatch);
  // cut mid-way through the last entry
  CHECK(failure_code([&] { RetrievalIndex::parse(text.substr(0, text.size() - 5)); }) ==
        ErrorCode::truncated_file);
  // drop the last entry entirely
  const std::string two = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  CHECK(failure_code([&] { RetrievalIndex::parse(two); }) == ErrorCode::truncated_file);
}

TEST_CASE("concurrent writers and readers") {
  RetrievalIndex index(3, kCb);
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&index, t] {
      for (int i = 0; i < 100; ++i) {
        index.add({"t" + std::to_string(t) + "_" + std::to_string(i),
                   vec({static_cast<double>(t), static_cast<double>(i), 0}), "", ""});
        const auto r = index.query(vec({0, 0, 0}), 5);
        CHECK(std::is_sorted(r.begin(), r.end(), [](const auto& a, const auto& b) {
          return a.distance < b.distance || (a.distance == b.distance && a.image_id < b.image_id);
        }));
      }
    });
  }
  threads.clear();
  CHECK(index.size() == 400);
}
