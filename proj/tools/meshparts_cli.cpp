// Command-line front end: dataset synthesis, local-weight export, training,
// reconstruction, part editing and the embedding report.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshparts/meshparts.hpp"

namespace fs = std::filesystem;
using namespace meshparts;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string summary_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".summary.csv";
  return csv_path + ".summary.csv";
}

std::vector<std::size_t> parse_part_list(const std::string& text, std::size_t part_count) {
  std::vector<std::size_t> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string token =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (token.empty()) throw DataError("empty entry in part list '" + text + "'");
    std::size_t value = 0;
    for (char c : token) {
      if (c < '0' || c > '9') throw DataError("bad part index '" + token + "'");
      value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    if (value >= part_count)
      throw DataError("part index " + token + " out of range (parts: " +
                      std::to_string(part_count) + ")");
    parts.push_back(value);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return parts;
}

DenseMatrix encode_dir(const Checkpoint& ckpt, const std::string& dir) {
  const std::vector<Mesh> meshes = load_mesh_dir(dir);
  DenseMatrix rows(meshes.size(), ckpt.config.latent);
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const EncodedMesh enc = encode_mesh(ckpt, meshes[i]);
    for (std::size_t j = 0; j < enc.z.cols; ++j) rows(i, j) = enc.z.values[j];
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshparts: part-aware mesh autoencoder toolkit"};
  app.require_subcommand(1);

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "generate a seeded synthetic face dataset");
  std::size_t synth_n = 200;
  std::string synth_template, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--n", synth_n, "number of samples")->required();
  synth->add_option("--template", synth_template, "template OBJ")->required();
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  // nmf-weights
  auto* nmfcmd = app.add_subcommand("nmf-weights", "export sparse-NMF local weights");
  std::string nmf_template, nmf_out, nmf_ply_dir;
  std::size_t nmf_parts = 4, nmf_restarts = 5;
  double nmf_sparsity = 7.5;
  std::uint64_t nmf_seed = 0;
  nmfcmd->add_option("--template", nmf_template, "template OBJ")->required();
  nmfcmd->add_option("--parts", nmf_parts, "number of parts");
  nmfcmd->add_option("--sparsity", nmf_sparsity, "L1 penalty on H");
  nmfcmd->add_option("--restarts", nmf_restarts, "seeded restarts");
  nmfcmd->add_option("--seed", nmf_seed, "random seed");
  nmfcmd->add_option("--out", nmf_out, "output CSV (P rows, K columns)")->required();
  nmfcmd->add_option("--ply-dir", nmf_ply_dir, "directory for per-part colored PLY files");

  // train
  auto* traincmd = app.add_subcommand("train", "train the autoencoder");
  std::string train_data, train_config, train_out;
  std::uint64_t train_seed = 0;
  bool train_no_weights = false, train_no_projection = false;
  traincmd->add_option("--data", train_data, "dataset directory")->required();
  traincmd->add_option("--config", train_config, "config file (key = value)");
  auto* train_seed_opt = traincmd->add_option("--seed", train_seed, "random seed");
  traincmd->add_option("--out", train_out, "output checkpoint")->required();
  traincmd->add_flag("--no-local-weights", train_no_weights, "train with all-ones weights");
  traincmd->add_flag("--no-projection", train_no_projection, "train without factorization");

  // reconstruct
  auto* recon = app.add_subcommand("reconstruct", "encode and decode one mesh");
  std::string recon_ckpt, recon_in, recon_out;
  recon->add_option("--ckpt", recon_ckpt, "checkpoint")->required();
  recon->add_option("--in", recon_in, "input OBJ")->required();
  recon->add_option("--out", recon_out, "output OBJ")->required();

  // interpolate
  auto* interp = app.add_subcommand("interpolate", "interpolate one part encoding");
  std::string interp_ckpt, interp_src, interp_tgt, interp_out;
  std::size_t interp_part = 0, interp_steps = 8;
  interp->add_option("--ckpt", interp_ckpt, "checkpoint")->required();
  interp->add_option("--source", interp_src, "source OBJ")->required();
  interp->add_option("--target", interp_tgt, "target OBJ")->required();
  interp->add_option("--part", interp_part, "part index")->required();
  interp->add_option("--steps", interp_steps, "interior interpolation steps");
  interp->add_option("--out", interp_out, "output directory")->required();

  // swap
  auto* swapcmd = app.add_subcommand("swap", "swap part encodings from the target");
  std::string swap_ckpt, swap_src, swap_tgt, swap_parts_text, swap_out;
  swapcmd->add_option("--ckpt", swap_ckpt, "checkpoint")->required();
  swapcmd->add_option("--source", swap_src, "source OBJ")->required();
  swapcmd->add_option("--target", swap_tgt, "target OBJ")->required();
  swapcmd->add_option("--parts", swap_parts_text, "comma-separated part indices")->required();
  swapcmd->add_option("--out", swap_out, "output OBJ")->required();

  // hausdorff
  auto* haus = app.add_subcommand("hausdorff", "per-vertex distance between registered meshes");
  std::string haus_a, haus_b, haus_out;
  haus->add_option("--a", haus_a, "first OBJ")->required();
  haus->add_option("--b", haus_b, "second OBJ")->required();
  haus->add_option("--out", haus_out, "colored PLY output")->required();

  // embed-viz
  auto* viz = app.add_subcommand("embed-viz", "PCA diversity report over encoding sets");
  std::string viz_ckpt, viz_train, viz_test, viz_synth, viz_out;
  viz->add_option("--ckpt", viz_ckpt, "checkpoint")->required();
  viz->add_option("--train", viz_train, "directory of training OBJ meshes")->required();
  viz->add_option("--test", viz_test, "directory of test OBJ meshes")->required();
  viz->add_option("--synth", viz_synth, "directory of synthesized OBJ meshes")->required();
  viz->add_option("--out", viz_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) {
      const Mesh tmpl = load_obj_file(synth_template);
      const Dataset dataset = synth_faces(synth_n, tmpl, synth_seed);
      save_dataset(dataset, synth_out);
      std::printf("wrote %zu train / %zu test samples to %s\n", dataset.train_indices.size(),
                  dataset.test_indices.size(), synth_out.c_str());
    } else if (*nmfcmd) {
      const Mesh tmpl = load_obj_file(nmf_template);
      RunConfig config;
      config.parts = nmf_parts;
      config.sparsity = nmf_sparsity;
      config.nmf_restarts = nmf_restarts;
      config.seed = nmf_seed;
      const Hierarchy hierarchy = build_hierarchy(tmpl, config.levels, config.factor);
      const LocalWeights weights = compute_local_weights(hierarchy, config);

      std::string csv;
      for (std::size_t i = 0; i < weights.w.rows; ++i) {
        for (std::size_t j = 0; j < weights.w.cols; ++j) {
          if (j) csv += ',';
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", weights.w(i, j));
          csv += buf;
        }
        csv += '\n';
      }
      write_text_file(nmf_out, csv);
      if (!nmf_ply_dir.empty()) {
        fs::create_directories(nmf_ply_dir);
        const DenseMatrix fine = upsample_weights(hierarchy, weights.w);
        for (std::size_t k = 0; k < fine.cols; ++k) {
          std::vector<double> column(fine.rows);
          for (std::size_t i = 0; i < fine.rows; ++i) column[i] = fine(i, k);
          const std::string path =
              (fs::path(nmf_ply_dir) / ("weights_part" + std::to_string(k) + ".ply")).string();
          write_text_file(path, write_ply_colored(hierarchy.finest(), column));
        }
      }
      std::printf("local weights: %zu vertices x %zu parts -> %s\n", weights.w.rows,
                  weights.w.cols, nmf_out.c_str());
    } else if (*traincmd) {
      RunConfig config = train_config.empty() ? RunConfig{} : parse_config_file(train_config);
      if (train_no_weights) config.no_local_weights = true;
      if (train_no_projection) config.no_projection = true;
      const std::uint64_t seed = train_seed_opt->count() ? train_seed : config.seed;
      const Dataset dataset = load_dataset(train_data);
      const TrainResult result = train(dataset, config, seed, /*verbose=*/true);
      save_checkpoint_file(result.checkpoint, train_out);
      if (result.diverged) {
        std::fprintf(stderr, "training diverged; checkpoint holds epoch %zu\n",
                     result.completed_epochs);
        return kExitNumeric;
      }
      const auto& last = result.checkpoint.metrics.back();
      std::printf("trained %zu epochs; final recon %.6f cycle %.6f -> %s\n",
                  result.completed_epochs, last[0], last[1], train_out.c_str());
    } else if (*recon) {
      const Checkpoint ckpt = load_checkpoint_file(recon_ckpt);
      const Mesh input = load_obj_file(recon_in);
      write_text_file(recon_out, write_obj(reconstruct_mesh(ckpt, input)));
      std::printf("reconstructed %s -> %s\n", recon_in.c_str(), recon_out.c_str());
    } else if (*interp) {
      const Checkpoint ckpt = load_checkpoint_file(interp_ckpt);
      const Mesh source = load_obj_file(interp_src);
      const Mesh target = load_obj_file(interp_tgt);
      if (interp_steps < 1) throw DataError("--steps must be at least 1");
      fs::create_directories(interp_out);
      Mesh first, last;
      for (std::size_t i = 1; i <= interp_steps; ++i) {
        const double alpha =
            static_cast<double>(i) / static_cast<double>(interp_steps + 1);
        const Mesh blended = interpolate_part(ckpt, source, target, interp_part, alpha);
        char name[32];
        std::snprintf(name, sizeof(name), "interp_%zu.obj", i);
        write_text_file((fs::path(interp_out) / name).string(), write_obj(blended));
        if (i == 1) first = blended;
        last = blended;
      }
      const DistanceField field = vertex_distance_field(first, last);
      write_text_file((fs::path(interp_out) / "distance.ply").string(),
                      write_ply_colored(first, field.per_vertex));
      std::printf("wrote %zu interpolants and distance.ply to %s (hausdorff %.17g)\n",
                  interp_steps, interp_out.c_str(), field.hausdorff);
    } else if (*swapcmd) {
      const Checkpoint ckpt = load_checkpoint_file(swap_ckpt);
      const Mesh source = load_obj_file(swap_src);
      const Mesh target = load_obj_file(swap_tgt);
      const auto parts = parse_part_list(swap_parts_text, ckpt.config.parts);
      write_text_file(swap_out, write_obj(swap_parts(ckpt, source, target, parts)));
      std::printf("swapped %zu part(s) -> %s\n", parts.size(), swap_out.c_str());
    } else if (*haus) {
      const Mesh a = load_obj_file(haus_a);
      const Mesh b = load_obj_file(haus_b);
      const DistanceField field = vertex_distance_field(a, b);
      write_text_file(haus_out, write_ply_colored(a, field.per_vertex));
      std::printf("%.17g\n", field.hausdorff);
    } else if (*viz) {
      const Checkpoint ckpt = load_checkpoint_file(viz_ckpt);
      std::vector<LabeledEncodings> sets;
      sets.push_back({"train", encode_dir(ckpt, viz_train)});
      sets.push_back({"test", encode_dir(ckpt, viz_test)});
      sets.push_back({"synth", encode_dir(ckpt, viz_synth)});
      const DiversityReport report = diversity_report(sets);
      write_text_file(viz_out, report.csv);
      write_text_file(summary_path(viz_out), report.summary_csv);
      for (const auto& e : report.ellipses)
        std::printf("%s: %zu encodings, ellipse area %.6f\n", e.label.c_str(), e.count, e.area);
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
