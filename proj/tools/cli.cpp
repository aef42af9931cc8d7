#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <optional>

#include "etc_cbir/codebook.hpp"
#include "etc_cbir/error.hpp"
#include "etc_cbir/esimple.hpp"
#include "etc_cbir/etc_crypto.hpp"
#include "etc_cbir/eval.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/parallel.hpp"
#include "etc_cbir/retrieval_index.hpp"
#include "serve_flags.hpp"

namespace etc_cbir::tools {

namespace {

namespace fs = std::filesystem;

Raster load_cropped(const fs::path& path, std::ostream& err) {
  const Raster img = load_image(path);
  Raster cropped = crop_to_block_multiple(img);
  if (cropped.width() != img.width() || cropped.height() != img.height()) {
    err << "note: " << path.string() << " cropped from " << img.width() << 'x' << img.height()
        << " to " << cropped.width() << 'x' << cropped.height() << '\n';
  }
  return cropped;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      const auto listed = list_images(in);
      out.insert(out.end(), listed.begin(), listed.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"etc-cbir: privacy-preserving image retrieval over EtC-encrypted images"};
  app.require_subcommand(1);

  // keygen
  std::optional<std::uint64_t> key_seed;
  std::string key_out;
  auto* keygen_cmd = app.add_subcommand("keygen", "generate a key set");
  keygen_cmd->add_option("--seed", key_seed, "deterministic seed (default: system entropy)");
  keygen_cmd->add_option("-o,--output", key_out, "key file (default: stdout)");

  // encrypt / decrypt
  std::string key_path, image_in, image_out;
  auto* encrypt_cmd = app.add_subcommand("encrypt", "encrypt an image into EtC form (PNG)");
  auto* decrypt_cmd = app.add_subcommand("decrypt", "decrypt an EtC image (PNG)");
  for (auto* cmd : {encrypt_cmd, decrypt_cmd}) {
    cmd->add_option("-k,--key", key_path, "key file")->required();
    cmd->add_option("input", image_in, "input image")->required();
    cmd->add_option("-o,--output", image_out, "output PNG")->required();
  }

  // codebook build
  std::string training_dir, codebook_out, dataset_label;
  KMeansConfig kcfg;
  auto* codebook_cmd = app.add_subcommand("codebook", "codebook operations");
  codebook_cmd->require_subcommand(1);
  auto* codebook_build = codebook_cmd->add_subcommand("build", "train a codebook on plain images");
  codebook_build->add_option("--images", training_dir, "directory of plain training images")->required();
  codebook_build->add_option("-M,--words", kcfg.clusters, "codebook size")->check(CLI::PositiveNumber);
  codebook_build->add_option("--seed", kcfg.seed, "k-means++ seed");
  codebook_build->add_option("--max-iters", kcfg.max_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  codebook_build->add_option("--tol", kcfg.tol, "relative inertia improvement to stop at");
  codebook_build->add_option("--label", dataset_label, "training dataset label");
  codebook_build->add_option("--threads", kcfg.threads, "worker threads (0: all cores)");
  codebook_build->add_option("-o,--output", codebook_out, "codebook file")->required();

  // index build
  std::string index_codebook, index_out, owner_info;
  std::vector<std::string> index_inputs;
  unsigned index_threads = 0;
  auto* index_cmd = app.add_subcommand("index", "index operations");
  index_cmd->require_subcommand(1);
  auto* index_build = index_cmd->add_subcommand("build", "index encrypted images");
  index_build->add_option("--codebook", index_codebook, "codebook file")->required();
  index_build->add_option("--owner", owner_info, "owner information stored with every entry");
  index_build->add_option("--threads", index_threads, "worker threads (0: all cores)");
  index_build->add_option("-o,--output", index_out, "index file")->required();
  index_build->add_option("images", index_inputs, "image files or directories")->required();

  // query
  std::string query_codebook, query_index, query_image;
  std::size_t top = 10;
  auto* query_cmd = app.add_subcommand("query", "rank indexed images against a query image");
  query_cmd->add_option("--codebook", query_codebook, "codebook file")->required();
  query_cmd->add_option("--index", query_index, "index file")->required();
  query_cmd->add_option("--top", top, "number of results")->check(CLI::PositiveNumber);
  query_cmd->add_option("image", query_image, "query image")->required();

  // eval map
  std::string manifest_path, eval_source, report_out;
  KMeansConfig eval_kcfg;
  bool eval_encrypt = false;
  std::uint64_t eval_key_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluation");
  eval_cmd->require_subcommand(1);
  auto* eval_map = eval_cmd->add_subcommand("map", "mean average precision over a manifest");
  eval_map->add_option("--manifest", manifest_path, "CSV of path,group_id")->required();
  eval_map->add_option("--codebook-source", eval_source, "directory of plain training images")->required();
  eval_map->add_option("-M,--words", eval_kcfg.clusters, "codebook size")->check(CLI::PositiveNumber);
  eval_map->add_option("--seed", eval_kcfg.seed, "k-means++ seed");
  eval_map->add_option("--max-iters", eval_kcfg.max_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  eval_map->add_option("--threads", eval_kcfg.threads, "worker threads (0: all cores)");
  eval_map->add_flag("--encrypt", eval_encrypt, "encrypt stored and query images with independent keys");
  eval_map->add_option("--key-seed", eval_key_seed, "seed for per-image keys");
  eval_map->add_option("-o,--output", report_out, "JSON report file (default: stdout)");

  // serve
  ServeFlags serve_flags;
  auto* serve_cmd = app.add_subcommand("serve", "run the third-party HTTP service");
  add_serve_flags(*serve_cmd, serve_flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (keygen_cmd->parsed()) {
      const KeySet keys = keygen(key_seed);
      if (key_out.empty()) {
        out << format_key(keys);
      } else {
        save_key(keys, key_out);
      }
    } else if (encrypt_cmd->parsed()) {
      save_png(encrypt(load_cropped(image_in, err), load_key(key_path)), image_out);
    } else if (decrypt_cmd->parsed()) {
      save_png(decrypt(load_cropped(image_in, err), load_key(key_path)), image_out);
    } else if (codebook_build->parsed()) {
      const auto paths = list_images(training_dir);
      std::vector<Raster> images(paths.size());
      parallel_for(paths.size(), kcfg.threads, [&](std::size_t i) { images[i] = load_image(paths[i]); });
      const Codebook cb =
          build_codebook(images, kcfg, {}, dataset_label.empty() ? training_dir : dataset_label);
      cb.save(codebook_out);
      err << "codebook: M=" << cb.size() << " from " << paths.size() << " images, "
          << cb.info().iterations << " iterations, id " << cb.id() << '\n';
    } else if (index_build->parsed()) {
      const Codebook cb = Codebook::load(index_codebook);
      const auto paths = expand_inputs(index_inputs);
      std::vector<Raster> images(paths.size());
      parallel_for(paths.size(), index_threads,
                   [&](std::size_t i) { images[i] = crop_to_block_multiple(load_image(paths[i])); });
      const auto vectors = esimple_batch(images, cb, index_threads);
      RetrievalIndex index(cb.size(), cb.id());
      for (std::size_t i = 0; i < paths.size(); ++i) {
        index.add({paths[i].stem().string(), vectors[i], owner_info, paths[i].string()});
      }
      index.save(index_out);
      err << "indexed " << index.size() << " images\n";
    } else if (query_cmd->parsed()) {
      const Codebook cb = Codebook::load(query_codebook);
      const RetrievalIndex index = RetrievalIndex::load(query_index);
      const auto q = esimple(load_cropped(query_image, err), cb);
      for (const RankedResult& r : index.query(q, top)) {
        out << r.rank << '\t' << r.image_id << '\t' << format_double(r.distance) << '\n';
      }
    } else if (eval_map->parsed()) {
      ExperimentConfig cfg;
      cfg.kmeans = eval_kcfg;
      if (eval_encrypt) cfg.encryption = EncryptionOptions{eval_key_seed};
      const EvalManifest manifest = load_manifest(manifest_path);
      const auto outcome =
          run_experiment(manifest, fs::path(manifest_path).parent_path(), eval_source, cfg);
      const std::string json = to_json(outcome.report) + "\n";
      if (report_out.empty()) {
        out << json;
      } else {
        write_file_bytes(report_out, {reinterpret_cast<const std::uint8_t*>(json.data()), json.size()});
        err << "mAP " << outcome.report.map << '\n';
      }
    } else if (serve_cmd->parsed()) {
      ImageService service(resolve_serve_flags(serve_flags));
      err << "listening on " << service.config().host << ':' << service.config().port << '\n';
      service.run();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::invalid_argument ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace etc_cbir::tools
