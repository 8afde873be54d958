#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pog/config.hpp"
#include "pog/error.hpp"
#include "pog/evaluation.hpp"
#include "pog/forest.hpp"
#include "pog/grid.hpp"
#include "pog/hypotheses.hpp"
#include "pog/io.hpp"
#include "pog/parallel.hpp"
#include "pog/quantization.hpp"
#include "pog/scenario.hpp"

namespace pog {

namespace fs = std::filesystem;

struct SimulatedScene {
  AugmentedOccupancyGrid aog;
  std::vector<PredictedOccupancyGrid> pogs;
};

/// Ground-truth simulation of one scene: the current-state grid plus one POG
/// per prediction instance.
inline SimulatedScene simulate_scene(const Scene& scene, const RunConfig& cfg) {
  SimulatedScene out{build_aog(scene, cfg.grid), {}};
  const auto limits = road_limit_cells(scene.road, cfg.grid);
  std::vector<std::vector<HypothesisSet>> per_object;
  std::vector<Footprint> footprints;
  for (const auto& obj : scene.objects) {
    per_object.push_back(hypothesis_sets(scene, obj.id, cfg.instants, cfg.hypotheses));
    footprints.push_back(obj.footprint);
  }
  for (std::size_t k = 0; k < cfg.instants.size(); ++k) {
    std::vector<HypothesisSet> sets;
    sets.reserve(per_object.size());
    for (const auto& sets_of_object : per_object) sets.push_back(sets_of_object[k]);
    out.pogs.push_back(build_pog(sets, footprints, cfg.grid, cfg.instants[k], limits));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset directory: scene_XXXXXX.aog.bin + one .pog_K.bin per instance and a
// manifest carrying the config hash, seed, split membership and the
// rasterization conventions.
// ---------------------------------------------------------------------------

struct DatasetManifest {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  GridSpec grid;
  std::vector<double> instants;
  std::vector<CellIndex> limit_cells;
  struct SceneEntry {
    std::size_t index = 0;
    std::string split;  // "train" | "validation"
    std::string aog;
    std::vector<std::string> pogs;
  };
  std::vector<SceneEntry> scenes;

  std::uint64_t dataset_hash() const {
    return fnv1a(std::to_string(config_hash) + ":" + std::to_string(seed) + ":" +
                 std::to_string(scenes.size()));
  }
};

inline void save_manifest(const fs::path& path, const DatasetManifest& m) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["config_hash"] = m.config_hash;
  j["dataset_hash"] = m.dataset_hash();
  j["seed"] = m.seed;
  j["grid"] = {{"origin_x", m.grid.origin_x},     {"origin_y", m.grid.origin_y},
               {"cell_length", m.grid.cell_length}, {"cell_width", m.grid.cell_width},
               {"cols", m.grid.cols},              {"rows", m.grid.rows}};
  j["instants"] = m.instants;
  j["format_versions"] = {{"scenario", kScenarioSchemaVersion},
                          {"grid", kGridFormatVersion},
                          {"model", kModelFormatVersion}};
  j["rasterization"] = "cell-center containment with guaranteed CoG cell; full footprints";
  json limits = json::array();
  for (const auto c : m.limit_cells) limits.push_back(json::array({c.i, c.j}));
  j["road_limit_cells"] = limits;
  json scenes = json::array();
  for (const auto& s : m.scenes) {
    scenes.push_back(json{
        {"index", s.index}, {"split", s.split}, {"aog", s.aog}, {"pogs", s.pogs}});
  }
  j["scenes"] = scenes;
  io_detail::write_text_file(path, j.dump(2) + "\n");
}

inline DatasetManifest load_manifest(const fs::path& path) {
  const auto j = io_detail::load_json_file(path);
  DatasetManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::uint64_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& g = j.at("grid");
    m.grid.origin_x = g.at("origin_x").get<double>();
    m.grid.origin_y = g.at("origin_y").get<double>();
    m.grid.cell_length = g.at("cell_length").get<double>();
    m.grid.cell_width = g.at("cell_width").get<double>();
    m.grid.cols = g.at("cols").get<int>();
    m.grid.rows = g.at("rows").get<int>();
    m.instants = j.at("instants").get<std::vector<double>>();
    for (const auto& c : j.at("road_limit_cells")) {
      m.limit_cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    }
    for (const auto& s : j.at("scenes")) {
      DatasetManifest::SceneEntry e;
      e.index = s.at("index").get<std::size_t>();
      e.split = s.at("split").get<std::string>();
      e.aog = s.at("aog").get<std::string>();
      e.pogs = s.at("pogs").get<std::vector<std::string>>();
      m.scenes.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return m;
}

namespace pipeline_detail {

inline std::string scene_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%06zu", index);
  return buf;
}

inline void write_scene_files(const fs::path& dir, std::size_t index,
                              const SimulatedScene& sim, DatasetManifest::SceneEntry& entry) {
  const std::string stem = scene_stem(index);
  entry.index = index;
  entry.aog = stem + ".aog.bin";
  save_aog_binary(dir / entry.aog, sim.aog);
  for (std::size_t k = 0; k < sim.pogs.size(); ++k) {
    const std::string name = stem + ".pog_" + std::to_string(k) + ".bin";
    save_pog_binary(dir / name, sim.pogs[k]);
    entry.pogs.push_back(name);
  }
}

}  // namespace pipeline_detail

/// One-scene ground-truth simulation to files (AOG + k POGs + manifest).
inline void run_simulate(const fs::path& scene_file, const fs::path& out_dir,
                         const RunConfig& cfg) {
  const ScenarioFile sf = load_scenario(scene_file);
  const SimulatedScene sim = simulate_scene(sf.scene, cfg);

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.seed;
  manifest.grid = cfg.grid;
  manifest.instants = cfg.instants;
  manifest.limit_cells = road_limit_cells(sf.scene.road, cfg.grid);
  manifest.scenes.emplace_back();
  manifest.scenes[0].split = "train";
  pipeline_detail::write_scene_files(out_dir, 0, sim, manifest.scenes[0]);
  save_manifest(out_dir / "manifest.json", manifest);
}

struct GenerateSummary {
  std::size_t n_scenes = 0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
};

/// Sweep expansion, ground-truth simulation of every scene, and dataset
/// export. The seed governs the train/validation shuffle.
inline GenerateSummary run_generate_dataset(const fs::path& scenario_file,
                                            const fs::path& out_dir, const RunConfig& cfg,
                                            std::optional<std::uint64_t> seed_override = {}) {
  const ScenarioFile sf = load_scenario(scenario_file);
  const std::uint64_t seed = seed_override.value_or(sf.sweep.seed);

  std::vector<Scene> scenes;
  if (sf.sweep.objects.empty()) {
    scenes.push_back(sf.scene);
  } else {
    scenes = generate_scenes(sf.scene, sf.sweep);
  }
  const auto [train_idx, val_idx] =
      split_indices(scenes.size(), cfg.train_fraction, seed);
  std::vector<std::string> split(scenes.size(), "train");
  for (const auto i : val_idx) split[i] = "validation";

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.config_hash = config_hash(cfg);
  manifest.seed = seed;
  manifest.grid = cfg.grid;
  manifest.instants = cfg.instants;
  manifest.limit_cells = road_limit_cells(sf.scene.road, cfg.grid);
  manifest.scenes.resize(scenes.size());

  const unsigned jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    const SimulatedScene sim = simulate_scene(scenes[i], cfg);
    manifest.scenes[i].split = split[i];
    pipeline_detail::write_scene_files(out_dir, i, sim, manifest.scenes[i]);
  });
  save_manifest(out_dir / "manifest.json", manifest);

  GenerateSummary summary;
  summary.n_scenes = scenes.size();
  summary.n_train = train_idx.size();
  summary.n_validation = val_idx.size();
  return summary;
}

/// Trains the per-cell ensemble on the dataset's training split and writes
/// the model container.
inline void run_train(const fs::path& dataset_dir, const fs::path& model_out,
                      const RunConfig& cfg) {
  const DatasetManifest manifest = load_manifest(dataset_dir / "manifest.json");
  if (!(manifest.grid == cfg.grid)) {
    throw ConfigError("train: config grid differs from the dataset grid");
  }
  if (manifest.instants != cfg.instants) {
    throw ConfigError("train: config instances differ from the dataset instances");
  }

  std::vector<const DatasetManifest::SceneEntry*> train_scenes;
  for (const auto& s : manifest.scenes) {
    if (s.split == "train") train_scenes.push_back(&s);
  }
  if (train_scenes.empty()) throw Error("train: dataset has no training scenes");

  std::vector<AugmentedOccupancyGrid> aogs;
  std::vector<std::vector<PredictedOccupancyGrid>> targets;
  aogs.reserve(train_scenes.size());
  targets.reserve(train_scenes.size());
  for (const auto* s : train_scenes) {
    aogs.push_back(load_aog_binary(dataset_dir / s->aog));
    std::vector<PredictedOccupancyGrid> per_scene;
    for (const auto& name : s->pogs) {
      per_scene.push_back(quantize(load_pog_binary(dataset_dir / name), cfg.qset));
    }
    targets.push_back(std::move(per_scene));
  }

  ForestConfig fcfg = cfg.forest;
  fcfg.seed = cfg.seed;
  fcfg.n_classes = cfg.qset.size();
  const unsigned jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  const PogEstimator est =
      PogEstimator::train(aogs, targets, manifest.instants, fcfg, cfg.qset, jobs);
  save_model(model_out, est, manifest.dataset_hash(), config_hash(cfg));
}

/// Estimates the POG stack of one scene file with a trained model.
inline void run_predict(const fs::path& model_file, const fs::path& scene_file,
                        const fs::path& out_dir) {
  const PogEstimator est = load_model(model_file);
  const ScenarioFile sf = load_scenario(scene_file);
  const AugmentedOccupancyGrid aog = build_aog(sf.scene, est.spec);

  fs::create_directories(out_dir);
  save_aog_binary(out_dir / "input.aog.bin", aog);
  for (std::size_t k = 0; k < est.instants.size(); ++k) {
    save_pog_binary(out_dir / ("estimated.pog_" + std::to_string(k) + ".bin"),
                    est.estimate(aog, est.instants[k]));
  }
}

struct EvaluateSummary {
  std::vector<AggregateReport> per_instant;
  std::size_t n_scenes = 0;
};

namespace pipeline_detail {

inline std::string opt_str(const std::optional<double>& v) {
  return v ? io_detail::fmt_double(*v) : std::string("-");
}

}  // namespace pipeline_detail

/// Estimates every scene of the chosen split, scores it against the quantized
/// ground truth and writes the report plus histogram exports.
inline EvaluateSummary run_evaluate(const fs::path& model_file, const fs::path& dataset_dir,
                                    const fs::path& out_dir, const RunConfig& cfg,
                                    const std::string& split = "validation") {
  const PogEstimator est = load_model(model_file);
  const DatasetManifest manifest = load_manifest(dataset_dir / "manifest.json");
  if (!(manifest.grid == est.spec)) {
    throw ConfigError("evaluate: model grid differs from the dataset grid");
  }

  std::vector<const DatasetManifest::SceneEntry*> scenes;
  for (const auto& s : manifest.scenes) {
    if (split == "all" || s.split == split) scenes.push_back(&s);
  }
  if (scenes.empty()) throw Error("evaluate: no scenes in split '" + split + "'");

  const std::size_t n_instants = manifest.instants.size();
  std::vector<std::vector<QualityReport>> reports(n_instants,
                                                  std::vector<QualityReport>(scenes.size()));
  std::vector<std::vector<PredictedOccupancyGrid>> truths(
      n_instants, std::vector<PredictedOccupancyGrid>(scenes.size()));

  const unsigned jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    const AugmentedOccupancyGrid aog = load_aog_binary(dataset_dir / scenes[i]->aog);
    for (std::size_t k = 0; k < n_instants; ++k) {
      const PredictedOccupancyGrid truth_q =
          quantize(load_pog_binary(dataset_dir / scenes[i]->pogs[k]), est.qset);
      const PredictedOccupancyGrid estimated = est.estimate(aog, manifest.instants[k]);
      reports[k][i] = quality(estimated, truth_q, manifest.limit_cells);
      truths[k][i] = truth_q;
    }
  });

  EvaluateSummary summary;
  summary.n_scenes = scenes.size();
  for (std::size_t k = 0; k < n_instants; ++k) {
    std::vector<const PredictedOccupancyGrid*> truth_ptrs;
    for (const auto& t : truths[k]) truth_ptrs.push_back(&t);
    summary.per_instant.push_back(aggregate(reports[k], truth_ptrs, manifest.instants[k]));
  }

  // report: aggregate table in the category-by-instance layout + scene rows
  fs::create_directories(out_dir);
  std::ostringstream os;
  os << "pogcast-evaluation-report 1\n";
  os << "split " << split << "\nscenes " << scenes.size() << "\ninstants";
  for (const double t : manifest.instants) os << ' ' << io_detail::fmt_double(t);
  os << "\n[aggregate]\n";
  auto row = [&](const char* name, auto getter) {
    os << name;
    for (const auto& agg : summary.per_instant) os << ' ' << pipeline_detail::opt_str(getter(agg));
    os << '\n';
  };
  row("eps_low", [](const AggregateReport& a) { return a.eps_low_mean; });
  row("eps_med", [](const AggregateReport& a) { return a.eps_med_mean; });
  row("eps_high", [](const AggregateReport& a) { return a.eps_high_mean; });
  os << "eps_mean";
  for (const auto& agg : summary.per_instant) os << ' ' << io_detail::fmt_double(agg.eps_mean);
  os << "\n[scenes]\n";
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (std::size_t k = 0; k < n_instants; ++k) {
      const QualityReport& r = reports[k][i];
      os << scenes[i]->index << ' ' << io_detail::fmt_double(manifest.instants[k]) << ' '
         << io_detail::fmt_double(r.epsilon) << ' ' << pipeline_detail::opt_str(r.eps_low)
         << ' ' << pipeline_detail::opt_str(r.eps_med) << ' '
         << pipeline_detail::opt_str(r.eps_high) << ' '
         << io_detail::fmt_double(r.mean_error_per_cell) << ' ' << r.k_mismatch << '\n';
    }
  }
  io_detail::write_text_file(out_dir / "report.txt", os.str());

  auto write_hist = [&](const char* name, auto member) {
    std::ostringstream hs;
    hs << "bin_lo";
    for (const double t : manifest.instants) hs << ",t_pred_" << io_detail::fmt_double(t);
    hs << '\n';
    for (int b = 0; b < kHistogramBins; ++b) {
      hs << io_detail::fmt_double(b * kHistogramBinWidth);
      for (const auto& agg : summary.per_instant) hs << ',' << (agg.*member)[std::size_t(b)];
      hs << '\n';
    }
    io_detail::write_text_file(out_dir / name, hs.str());
  };
  write_hist("hist_pq.csv", &AggregateReport::pq_histogram);
  write_hist("hist_eps.csv", &AggregateReport::eps_histogram);
  return summary;
}

struct CriticalityOutcome {
  CriticalityReport model_based;
  std::optional<CriticalityReport> ml_others;  // others stack from the RF model
};

/// Criticality of a scene for the chosen ego: the ego stack is built from the
/// ego object alone without road-limit injection, the others stack from the
/// remaining objects with limits. With a model, the others stack is also
/// estimated by the RF ensemble for comparison.
inline CriticalityOutcome run_criticality(const fs::path& scene_file, int ego_id,
                                          const RunConfig& cfg,
                                          const std::optional<fs::path>& model_file = {}) {
  const ScenarioFile sf = load_scenario(scene_file);
  sf.scene.object(ego_id);  // validates
  Scene ego_scene = sf.scene;
  ego_scene.objects.clear();
  Scene others_scene = sf.scene;
  others_scene.objects.clear();
  for (const auto& obj : sf.scene.objects) {
    (obj.id == ego_id ? ego_scene : others_scene).objects.push_back(obj);
  }
  if (others_scene.objects.empty()) {
    throw Error("criticality: scene has no objects besides the ego");
  }

  auto stack_for = [&](const Scene& scene, bool with_limits) {
    const auto limits =
        with_limits ? road_limit_cells(scene.road, cfg.grid) : std::vector<CellIndex>{};
    std::vector<std::vector<HypothesisSet>> per_object;
    std::vector<Footprint> footprints;
    for (const auto& obj : scene.objects) {
      per_object.push_back(hypothesis_sets(scene, obj.id, cfg.instants, cfg.hypotheses));
      footprints.push_back(obj.footprint);
    }
    std::vector<PredictedOccupancyGrid> stack;
    for (std::size_t k = 0; k < cfg.instants.size(); ++k) {
      std::vector<HypothesisSet> sets;
      for (const auto& so : per_object) sets.push_back(so[k]);
      stack.push_back(build_pog(sets, footprints, cfg.grid, cfg.instants[k], limits));
    }
    return stack;
  };

  const auto ego_stack = stack_for(ego_scene, false);
  const auto others_stack = stack_for(others_scene, true);

  CriticalityOutcome outcome;
  outcome.model_based = criticality(ego_stack, others_stack);

  if (model_file) {
    const PogEstimator est = load_model(*model_file);
    if (!(est.spec == cfg.grid) || est.instants != cfg.instants) {
      throw ConfigError("criticality: model grid/instances differ from the config");
    }
    const AugmentedOccupancyGrid others_aog = build_aog(others_scene, est.spec);
    outcome.ml_others = criticality(ego_stack, est.estimate_all(others_aog));
  }
  return outcome;
}

}  // namespace pog
