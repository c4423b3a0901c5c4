#pragma once

// PipelineConfig from a JSON document. Every key is optional:
//
//   {
//     "input": "data/",                      event-named subdirectories
//     "sources": {"Digging": ["a.mat", "more/"]},
//     "mat_variable": "data",
//     "mat_variable_overrides": {"odd.mat": "trace"},
//     "transpose": false,
//     "paa_length": 500,
//     "rp_percentile": 10,                   or "rp_epsilon": 0.05
//     "grid": [3, 4],
//     "resolution": [224, 224],
//     "split": "holdout",                    or "kfold"
//     "ratios": [0.70, 0.15, 0.15],
//     "folds": 5,
//     "seed": 0,
//     "workers": 0,
//     "output_dir": "out"
//   }
//
// Relative paths resolve against the directory holding the config file.

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "otdrimg/error.hpp"
#include "otdrimg/pipeline.hpp"

namespace otdrimg {

[[nodiscard]] inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                              const std::filesystem::path& base_dir,
                                                              PipelineConfig config = {}) {
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    if (j.contains("input")) {
      config.ingest = sources_from_event_dirs(resolve(j.at("input").get<std::string>()), config.ingest);
    }
    if (j.contains("sources")) {
      for (const auto& [event, paths] : j.at("sources").items()) {
        for (const auto& p : paths) {
          config.ingest.sources[event].push_back(resolve(p.get<std::string>()));
        }
      }
    }
    if (j.contains("mat_variable")) {
      config.ingest.mat_variable = j.at("mat_variable").get<std::string>();
    }
    if (j.contains("mat_variable_overrides")) {
      for (const auto& [file, var] : j.at("mat_variable_overrides").items()) {
        config.ingest.mat_variable_overrides[file] = var.get<std::string>();
      }
    }
    config.ingest.transpose = j.value("transpose", config.ingest.transpose);
    config.paa_length = j.value("paa_length", config.paa_length);
    if (j.contains("rp_percentile") && j.contains("rp_epsilon")) {
      throw Error(Errc::InvalidConfig, "set only one of rp_percentile and rp_epsilon");
    }
    if (j.contains("rp_percentile")) {
      config.rp = RpConfig::percentile(j.at("rp_percentile").get<double>());
    }
    if (j.contains("rp_epsilon")) {
      config.rp = RpConfig::fixed(j.at("rp_epsilon").get<double>());
    }
    if (j.contains("grid")) {
      config.grid_rows = j.at("grid").at(0).get<std::size_t>();
      config.grid_cols = j.at("grid").at(1).get<std::size_t>();
    }
    if (j.contains("resolution")) {
      config.out_height = j.at("resolution").at(0).get<std::size_t>();
      config.out_width = j.at("resolution").at(1).get<std::size_t>();
    }
    if (j.contains("split")) {
      const auto scheme = j.at("split").get<std::string>();
      if (scheme == "holdout") {
        config.split = SplitScheme::Holdout;
      } else if (scheme == "kfold") {
        config.split = SplitScheme::KFold;
      } else {
        throw Error(Errc::InvalidConfig, "split must be holdout or kfold, got '" + scheme + "'");
      }
    }
    if (j.contains("ratios")) {
      const auto& r = j.at("ratios");
      config.ratios = HoldoutRatios{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    }
    config.folds = j.value("folds", config.folds);
    config.seed = j.value("seed", config.seed);
    config.workers = j.value("workers", config.workers);
    if (j.contains("output_dir")) {
      config.output_dir = resolve(j.at("output_dir").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config: ") + e.what());
  }
  return config;
}

[[nodiscard]] inline PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                                         PipelineConfig config = {}) {
  std::ifstream file(path);
  if (!file) {
    throw Error(Errc::Io, "cannot open config " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path(), std::move(config));
}

}  // namespace otdrimg
