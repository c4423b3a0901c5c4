// otdrimg: command-line front end.
//
//   otdrimg transform --input DIR --out DIR [options]
//   otdrimg demo --n-per-class N --seed S --out DIR [options]
//   otdrimg score --predictions FILE --manifest FILE [--out FILE]
//   otdrimg inspect-mat --path FILE
//
// Exit codes: 0 success, 1 some samples failed, 2 fatal config or I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otdrimg/config_json.hpp"
#include "otdrimg/evalkit.hpp"
#include "otdrimg/mat.hpp"
#include "otdrimg/pipeline.hpp"

namespace {

using namespace otdrimg;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitFatal = 2;

struct BatchOptions {
  std::string config_file;
  std::string out;
  std::size_t paa_len = 0;
  double rp_percentile = 0.0;
  double rp_epsilon = 0.0;
  std::string resolution;
  unsigned workers = 0;
  std::uint64_t seed = 0;
  std::string split;
  std::string ratios;
  int folds = 0;
  CLI::Option* paa_opt = nullptr;
  CLI::Option* pct_opt = nullptr;
  CLI::Option* eps_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
};

void add_batch_options(CLI::App& cmd, BatchOptions& o) {
  cmd.add_option("--config", o.config_file, "JSON pipeline config; flags override it")
      ->check(CLI::ExistingFile);
  cmd.add_option("--out", o.out, "Output directory");
  o.paa_opt = cmd.add_option("--paa-len", o.paa_len, "PAA length = tile size (default 500)");
  o.pct_opt = cmd.add_option("--rp-percentile", o.rp_percentile,
                             "Recurrence threshold as a distance percentile (default 10)");
  o.eps_opt = cmd.add_option("--rp-epsilon", o.rp_epsilon, "Fixed recurrence threshold");
  o.pct_opt->excludes(o.eps_opt);
  cmd.add_option("--resolution", o.resolution, "Output size: N or HxW (default 224)");
  o.workers_opt = cmd.add_option("--workers", o.workers, "Worker threads, 0 = all cores");
  o.seed_opt = cmd.add_option("--seed", o.seed, "Split seed");
  cmd.add_option("--split", o.split, "holdout or kfold")->check(CLI::IsMember({"holdout", "kfold"}));
  cmd.add_option("--ratios", o.ratios, "train,val,test ratios (default 0.7,0.15,0.15)");
  o.folds_opt = cmd.add_option("--folds", o.folds, "Folds for kfold (default 5)");
}

PipelineConfig build_config(const BatchOptions& o) {
  PipelineConfig cfg;
  if (!o.config_file.empty()) {
    cfg = load_pipeline_config(o.config_file);
  }
  if (!o.out.empty()) {
    cfg.output_dir = o.out;
  }
  if (o.paa_opt->count() > 0) {
    cfg.paa_length = o.paa_len;
  }
  if (o.pct_opt->count() > 0) {
    cfg.rp = RpConfig::percentile(o.rp_percentile);
  }
  if (o.eps_opt->count() > 0) {
    cfg.rp = RpConfig::fixed(o.rp_epsilon);
  }
  if (!o.resolution.empty()) {
    const auto x = o.resolution.find('x');
    try {
      if (x == std::string::npos) {
        cfg.out_height = cfg.out_width = std::stoul(o.resolution);
      } else {
        cfg.out_height = std::stoul(o.resolution.substr(0, x));
        cfg.out_width = std::stoul(o.resolution.substr(x + 1));
      }
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, "--resolution expects N or HxW, got '" + o.resolution + "'");
    }
  }
  if (o.workers_opt->count() > 0) {
    cfg.workers = o.workers;
  }
  if (o.seed_opt->count() > 0) {
    cfg.seed = o.seed;
  }
  if (!o.split.empty()) {
    cfg.split = o.split == "kfold" ? SplitScheme::KFold : SplitScheme::Holdout;
  }
  if (!o.ratios.empty()) {
    std::vector<double> r;
    std::istringstream parts(o.ratios);
    std::string part;
    try {
      while (std::getline(parts, part, ',')) {
        r.push_back(std::stod(part));
      }
    } catch (const std::exception&) {
      r.clear();
    }
    if (r.size() != 3) {
      throw Error(Errc::InvalidConfig, "--ratios expects three comma-separated numbers");
    }
    cfg.ratios = HoldoutRatios{r[0], r[1], r[2]};
  }
  if (o.folds_opt->count() > 0) {
    cfg.folds = o.folds;
  }
  return cfg;
}

int report_batch(const BatchResult& result, const PipelineConfig& cfg) {
  const auto& s = result.stats;
  std::cout << "samples written: " << s.samples_processed << "\n"
            << "failures: " << result.errors.size() << "\n"
            << "input bytes: " << s.input_bytes << "\n"
            << "output bytes: " << s.output_bytes << "\n"
            << "compression ratio: " << s.compression_ratio() << "\n"
            << "manifest: " << (cfg.output_dir / "manifest.csv").string() << "\n";
  for (const auto& e : result.errors) {
    std::cerr << "error: " << e.unit << ": " << e.message << "\n";
  }
  return result.ok() ? kExitOk : kExitPartial;
}

int run_score(const std::string& predictions_path, const std::string& manifest_path,
              const std::string& out_path) {
  std::ifstream pin(predictions_path);
  if (!pin) {
    throw Error(Errc::Io, "cannot open " + predictions_path);
  }
  const auto preds = read_predictions(pin);
  if (!manifest_path.empty()) {
    std::ifstream min(manifest_path);
    if (!min) {
      throw Error(Errc::Io, "cannot open " + manifest_path);
    }
    const auto manifest = read_manifest(min);
    std::map<std::string, int> labels;
    for (const auto& row : manifest.rows) {
      labels[row.sample_id] = row.label;
    }
    for (const auto& p : preds) {
      const auto it = labels.find(p.sample_id);
      if (it == labels.end()) {
        throw Error(Errc::PredictionFormat, "sample '" + p.sample_id + "' is not in the manifest");
      }
      if (it->second != p.true_label) {
        throw Error(Errc::PredictionFormat, "sample '" + p.sample_id + "' has true_label " +
                                                std::to_string(p.true_label) + " but the manifest says " +
                                                std::to_string(it->second));
      }
    }
  }
  const auto report = compute_metrics(preds);
  if (out_path.empty()) {
    write_metrics_report(std::cout, report);
  } else {
    std::ofstream out(out_path);
    write_metrics_report(out, report);
    if (!out) {
      throw Error(Errc::Io, "failed writing " + out_path);
    }
  }
  return kExitOk;
}

int run_inspect(const std::string& path) {
  const auto contents = parse_mat(path);
  std::cout << "name\tclass\trows\tcols\n";
  for (const auto& a : contents.arrays) {
    std::cout << a.name << '\t' << a.source_class << '\t' << a.rows << '\t' << a.cols << '\n';
  }
  for (const auto& w : contents.warnings) {
    std::cout << "# " << w << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-OTDR series to GADF/GASF/RP image dataset toolkit"};
  app.require_subcommand(1);

  BatchOptions transform_opts;
  std::string input_dir;
  std::string mat_var;
  bool transpose = false;
  auto* transform = app.add_subcommand("transform", "Encode a measurement dataset into PNGs");
  transform->add_option("--input", input_dir, "Directory with one subdirectory per event name");
  transform->add_option("--mat-var", mat_var, "MAT variable holding the 12x10000 matrix");
  transform->add_flag("--transpose", transpose, "Accept 10000x12 arrays (regions as columns)");
  add_batch_options(*transform, transform_opts);

  BatchOptions demo_opts;
  std::size_t n_per_class = 10;
  auto* demo = app.add_subcommand("demo", "Generate and encode a synthetic dataset");
  demo->add_option("--n-per-class", n_per_class, "Samples per class")->check(CLI::PositiveNumber);
  add_batch_options(*demo, demo_opts);

  std::string predictions;
  std::string manifest;
  std::string score_out;
  auto* score = app.add_subcommand("score", "Compute metrics for a prediction CSV");
  score->add_option("--predictions", predictions, "sample_id,true_label,pred_label CSV")->required();
  score->add_option("--manifest", manifest, "Manifest to validate sample ids and labels against");
  score->add_option("--out", score_out, "Write the report here instead of stdout");

  std::string mat_path;
  auto* inspect = app.add_subcommand("inspect-mat", "List the arrays in a MAT file");
  inspect->add_option("--path", mat_path, "MAT file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*transform) {
      auto cfg = build_config(transform_opts);
      if (!input_dir.empty()) {
        cfg.ingest = sources_from_event_dirs(input_dir, cfg.ingest);
      }
      if (!mat_var.empty()) {
        cfg.ingest.mat_variable = mat_var;
      }
      if (transpose) {
        cfg.ingest.transpose = true;
      }
      if (cfg.ingest.sources.empty()) {
        throw Error(Errc::InvalidConfig, "no input sources: pass --input or a config with sources");
      }
      return report_batch(run_batch(cfg), cfg);
    }
    if (*demo) {
      auto cfg = build_config(demo_opts);
      return report_batch(demo_synthetic(cfg, n_per_class, cfg.seed), cfg);
    }
    if (*score) {
      return run_score(predictions, manifest, score_out);
    }
    if (*inspect) {
      return run_inspect(mat_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
