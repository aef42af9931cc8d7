// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero if
// any criterion fails.

#include <httplib.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "etc_cbir/codebook.hpp"
#include "etc_cbir/esimple.hpp"
#include "etc_cbir/etc_crypto.hpp"
#include "etc_cbir/eval.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/mcedd.hpp"
#include "etc_cbir/retrieval_index.hpp"
#include "etc_cbir/service.hpp"
#include "etc_cbir/splitmix64.hpp"
#include "synthetic.hpp"

using namespace etc_cbir;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

struct Criterion {
  std::string name;
  double time_limit_s;  // 0: no limit
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

double linf(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

int random_dim(SplitMix64& rng) { return 32 + 16 * static_cast<int>(rng.below(7)); }

Outcome round_trip() {
  SplitMix64 rng(0xACCE55);
  for (int i = 0; i < 200; ++i) {
    const Raster img = testing::noise_image(random_dim(rng), random_dim(rng), rng);
    const KeySet keys = keygen(rng.next());
    if (decrypt(encrypt(img, keys), keys) != img) return check(false, "image " + std::to_string(i) + " differs");
  }
  return check(true, "200 images bit-exact");
}

Outcome mcedd_invariance() {
  SplitMix64 rng(0x6E0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Block p = testing::random_block(rng);
    const PatchDescriptor ref = mcedd(p);
    for (int code = 0; code < kDihedralCount; ++code) {
      const Block t = apply_dihedral(p, dihedral_from_code(code));
      worst = std::max(worst, linf(mcedd(t), ref));
      worst = std::max(worst, linf(mcedd(negate_block(t)), ref));
    }
  }
  return check(worst < 1e-9, "max deviation " + fmt(worst) + " over 200 patches x 16 elements");
}

Outcome esimple_invariance() {
  const Codebook cb = build_codebook(testing::training_scenes(30, 0xE51), {64, 1, 100, 1e-6, 0}, {}, "synthetic");
  SplitMix64 rng(0xE52);
  std::vector<Raster> plain, enc_store, enc_query;
  for (int i = 0; i < 50; ++i) {
    const Raster img = testing::tiled_image(random_dim(rng), random_dim(rng), rng);
    plain.push_back(img);
    enc_store.push_back(encrypt(img, keygen(rng.next())));
    enc_query.push_back(encrypt(img, keygen(rng.next())));
  }
  const auto vp = esimple_batch(plain, cb);
  const auto vs = esimple_batch(enc_store, cb);
  const auto vq = esimple_batch(enc_query, cb);
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    worst = std::max(worst, linf(vp[i].values, vs[i].values));
    worst = std::max(worst, linf(vp[i].values, vq[i].values));
  }
  RetrievalIndex plain_index(cb.size(), cb.id()), enc_index(cb.size(), cb.id());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    plain_index.add({"img" + std::to_string(i), vp[i], "", ""});
    enc_index.add({"img" + std::to_string(i), vs[i], "", ""});
  }
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const auto a = plain_index.query(vp[i], plain.size());
    const auto b = enc_index.query(vq[i], plain.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (a[r].image_id != b[r].image_id) {
        ++mismatched;
        break;
      }
    }
  }
  return check(worst < 1e-9 && mismatched == 0,
               "max deviation " + fmt(worst) + ", " + std::to_string(mismatched) + "/50 rankings differ");
}

Outcome ap_oracle() {
  std::vector<std::string> ranking;
  for (int i = 1; i <= 10; ++i) ranking.push_back("r" + std::to_string(i));
  const double derived = average_precision(ranking, {"r1", "r2", "r5", "r7"});
  const double expected = (1.0 + 1.0 + 3.0 / 5.0 + 4.0 / 7.0) / 4.0;
  const double perfect = average_precision(ranking, {"r1", "r2", "r3", "r4"});
  const double single_first = average_precision(ranking, {"r1"});
  const double single_tenth = average_precision(ranking, {"r10"});
  const bool ok = std::abs(derived - 0.7928571428571429) < 1e-12 && std::abs(derived - expected) < 1e-12 &&
                  perfect == 1.0 && single_first == 1.0 && single_tenth == 0.1;
  return check(ok, "derived " + fmt(derived) + ", perfect " + fmt(perfect) + ", single " + fmt(single_first) +
                       "/" + fmt(single_tenth));
}

Outcome kmeans_properties() {
  // Monotone inertia.
  for (int inst = 0; inst < 10; ++inst) {
    SplitMix64 rng(0x4B00 + inst);
    FeatureMatrix pts(8);
    for (int i = 0; i < 400; ++i) {
      std::array<double, 8> p{};
      for (double& v : p) v = rng.unit();
      pts.append(p);
    }
    const auto res = kmeans(pts, {12, static_cast<std::uint64_t>(inst), 100, 1e-12, 0});
    for (std::size_t i = 1; i < res.inertia_history.size(); ++i) {
      if (res.inertia_history[i] > res.inertia_history[i - 1]) {
        return check(false, "instance " + std::to_string(inst) + " inertia rose at step " + std::to_string(i));
      }
    }
  }

  // Recovery: each cluster is its center plus symmetric +-0.5 offsets, so its
  // mean is the center exactly.
  constexpr int kClusters = 6;
  constexpr std::size_t kDim = 4;
  std::vector<std::array<double, kDim>> centers;
  FeatureMatrix pts(kDim);
  for (int c = 0; c < kClusters; ++c) {
    std::array<double, kDim> center{};
    for (std::size_t d = 0; d < kDim; ++d) center[d] = 100.0 * c + 7.0 * static_cast<double>(d);
    centers.push_back(center);
    for (std::size_t d = 0; d < kDim; ++d) {
      for (const double off : {-0.5, 0.5}) {
        auto p = center;
        p[d] += off;
        pts.append(p);
      }
    }
  }
  const auto res = kmeans(pts, {kClusters, 17, 100, 1e-6, 0});
  double worst = 0.0;
  for (const auto& center : centers) {
    double best = INFINITY;
    for (std::size_t r = 0; r < res.centroids.rows(); ++r) best = std::min(best, linf(res.centroids.row(r), center));
    worst = std::max(worst, best);
  }
  if (worst >= 1e-9) return check(false, "centroid recovery error " + fmt(worst));

  // Determinism of the serialized codebook.
  const auto scenes = testing::training_scenes(12, 0x4B99);
  const std::string a = build_codebook(scenes, {32, 5, 100, 1e-6, 1}).serialize();
  const std::string b = build_codebook(scenes, {32, 5, 100, 1e-6, 1}).serialize();
  const std::string c = build_codebook(scenes, {32, 5, 100, 1e-6, 4}).serialize();
  return check(a == b && a == c, "10 monotone instances, recovery error " + fmt(worst) +
                                     (a == b && a == c ? ", codebook bytes identical" : ", codebook bytes differ"));
}

Outcome end_to_end() {
  const auto corpus = testing::grouped_corpus(40, 0xD35C);
  std::vector<std::string> queries;
  for (const auto& c : corpus) queries.push_back(c.id);
  ExperimentConfig cfg;
  cfg.kmeans = {64, 1, 100, 1e-6, 0};
  cfg.codebook_source = "synthetic-disjoint";
  const auto training = testing::training_scenes(40, 0xD35D);
  const double plain = run_experiment(corpus, queries, training, cfg).report.map;
  cfg.encryption = EncryptionOptions{0x5EED};
  const double encrypted = run_experiment(corpus, queries, training, cfg).report.map;
  const double baseline = shuffled_ranking_map(corpus, queries, 0xBA5E);
  return check(plain >= 10.0 * baseline && std::abs(encrypted - plain) < 1e-9,
               "mAP " + fmt(plain) + ", encrypted " + fmt(encrypted) + ", shuffled baseline " + fmt(baseline) +
                   " (ratio " + fmt(plain / baseline) + ")");
}

std::vector<CorpusImage> load_ukbench(const fs::path& dir) {
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 1000; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "ukbench%05d.jpg", i);
    corpus.push_back({name, std::to_string(i / 4), crop_to_block_multiple(load_image(dir / name))});
  }
  return corpus;
}

Outcome dataset_reproduction() {
  const char* ukbench = std::getenv("ETC_CBIR_UKBENCH_DIR");
  const char* corel = std::getenv("ETC_CBIR_COREL_DIR");
  const char* ucid = std::getenv("ETC_CBIR_UCID_DIR");
  if (ukbench == nullptr || (corel == nullptr && ucid == nullptr)) {
    return {Status::skip, "set ETC_CBIR_UKBENCH_DIR and ETC_CBIR_COREL_DIR and/or ETC_CBIR_UCID_DIR"};
  }
  const auto corpus = load_ukbench(ukbench);
  std::vector<std::string> queries;
  for (const auto& c : corpus) queries.push_back(c.id);

  struct Source {
    const char* label;
    const char* dir;
    double target256;
    double target512;
  };
  bool ok = true;
  std::string detail;
  for (const Source& s : {Source{"COREL", corel, 0.9287, 0.9351}, Source{"UCID", ucid, 0.9262, 0.9332}}) {
    if (s.dir == nullptr) continue;
    std::vector<Raster> training;
    for (const auto& p : list_images(s.dir)) training.push_back(load_image(p));
    double maps[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i) {
      ExperimentConfig cfg;
      cfg.kmeans = {i == 0 ? 256u : 512u, 0, 100, 1e-6, 0};
      cfg.codebook_source = s.label;
      maps[i] = run_experiment(corpus, queries, training, cfg).report.map;
    }
    ok = ok && std::abs(maps[0] - s.target256) <= 0.03 && std::abs(maps[1] - s.target512) <= 0.03 &&
         maps[1] >= maps[0];
    detail += std::string(s.label) + " M=256 " + fmt(maps[0]) + " M=512 " + fmt(maps[1]) + "; ";
  }
  return check(ok, detail);
}

std::string run_command(const std::string& cmd) {
  std::array<char, 4096> buf{};
  std::string out;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return out;
  while (std::fgets(buf.data(), buf.size(), pipe.get())) out += buf.data();
  return out;
}

Outcome service_contract() {
  const fs::path root = fs::temp_directory_path() / "etc_cbir_acceptance_service";
  fs::remove_all(root);
  fs::create_directories(root);
  build_codebook(testing::training_scenes(10, 0x5E1), {32, 2, 100, 1e-6, 0}).save(root / "cb.txt");
  ServiceConfig cfg;
  cfg.codebook_path = root / "cb.txt";
  cfg.index_path = root / "index.txt";
  cfg.storage_dir = root / "store";
  ImageService service(cfg);
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  auto upload = [&](const std::string& id, const Raster& img) {
    const auto bytes = encode_png(img);
    httplib::MultipartFormDataItems items = {{"image", std::string(bytes.begin(), bytes.end()), "i.png", "image/png"},
                                             {"image_id", id, "", ""},
                                             {"owner_info", "owner-" + id, "", ""}};
    const auto res = client.Post("/images", items);
    return res ? res->status : -1;
  };

  const KeySet owner_key = keygen(0x0A);
  const KeySet user_key = keygen(0x0B);
  const Raster target = testing::variant(testing::scene(0x7A), 8, 8, 64, 0);
  bool ok = upload("target", encrypt(target, owner_key)) == 201;
  for (int i = 0; i < 5; ++i) {
    ok = ok && upload("other" + std::to_string(i), encrypt(testing::variant(testing::scene(0x80 + i), 0, 0, 64, 0),
                                                          keygen(0x100 + i))) == 201;
  }
  const int duplicate_status = upload("target", encrypt(target, owner_key));

  const auto qbytes = encode_png(encrypt(target, user_key));
  const auto res = client.Post(
      "/query", httplib::MultipartFormDataItems{{"image", std::string(qbytes.begin(), qbytes.end()), "q.png", "image/png"}});
  std::string top_id;
  double top_distance = INFINITY;
  if (res && res->status == 200) {
    const auto body = nlohmann::json::parse(res->body);
    if (!body["results"].empty()) {
      top_id = body["results"][0]["image_id"];
      top_distance = body["results"][0]["distance"];
    }
  }
  server.stop();
  thread.join();
  fs::remove_all(root);

  std::string leaked;
  for (const char* binary : {ETC_CBIR_SERVICE_LIB, ETC_CBIR_SERVER_BIN}) {
    const std::string symbols = run_command(std::string("nm -C ") + binary + " 2>/dev/null");
    if (symbols.find("etc_cbir::") == std::string::npos) leaked += std::string(" unreadable:") + binary;
    for (const char* s : {"etc_cbir::decrypt", "etc_cbir::keygen", "KeySet"}) {
      if (symbols.find(s) != std::string::npos) leaked += std::string(" ") + s;
    }
  }

  ok = ok && top_id == "target" && top_distance < 1e-9 && duplicate_status == 409 && leaked.empty();
  return check(ok, "rank 1 " + top_id + " at " + fmt(top_distance) + ", duplicate -> " +
                       std::to_string(duplicate_status) + ", key symbols in server:" +
                       (leaked.empty() ? std::string(" none") : leaked));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"round-trip", 10.0, round_trip},
      {"mcedd-group-invariance", 10.0, mcedd_invariance},
      {"esimple-encryption-invariance", 0.0, esimple_invariance},
      {"ap-oracle", 0.0, ap_oracle},
      {"kmeans", 0.0, kmeans_properties},
      {"end-to-end-desk-experiment", 120.0, end_to_end},
      {"dataset-reproduction", 0.0, dataset_reproduction},
      {"service-contract", 0.0, service_contract},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Status::pass && c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o = {Status::fail, o.detail + "; over time limit " + fmt(c.time_limit_s) + " s"};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    if (o.status == Status::fail) ++failures;
    std::cout << tag << "  " << c.name << "  (" << o.detail << "; " << std::fixed << std::setprecision(2) << secs
              << " s)\n"
              << std::defaultfloat << std::flush;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
