// Command-line front end for the traffic-scenario prediction pipeline:
// scenario generation, ground-truth simulation, per-cell ensemble training,
// inference, evaluation, criticality and benchmarking.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pog/config.hpp"
#include "pog/error.hpp"
#include "pog/evaluation.hpp"
#include "pog/io.hpp"
#include "pog/pipeline.hpp"
#include "pog/scenario.hpp"

namespace {

using namespace pog;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "configuration file (JSON)");
  cmd->add_option("--seed", opts.seed, "seed override");
  cmd->add_option("--jobs", opts.jobs, "worker threads (default: logical cores)");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg;
  if (!opts.config_file.empty()) cfg = load_config(opts.config_file);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  validate_config(cfg);
  return cfg;
}

std::string fmt(double v) { return io_detail::fmt_double(v); }

void print_criticality(std::ostream& os, const CriticalityOutcome& outcome) {
  os << "pogcast-criticality-report 1\n";
  const auto& mb = outcome.model_based;
  os << "instants";
  for (const double t : mb.instants) os << ' ' << fmt(t);
  os << "\nmodel_based";
  for (const double c : mb.c_per_instant) os << ' ' << fmt(c);
  os << "\nmodel_based_argmax";
  for (const auto c : mb.argmax_cell) os << ' ' << c.i << ',' << c.j;
  os << "\nmodel_based_total " << fmt(mb.c_total) << " at_instant "
     << fmt(mb.instants[mb.argmax_instant]) << '\n';
  if (outcome.ml_others) {
    const auto& ml = *outcome.ml_others;
    os << "ml_others";
    for (const double c : ml.c_per_instant) os << ' ' << fmt(c);
    os << "\nml_others_total " << fmt(ml.c_total) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traffic-scenario occupancy prediction pipeline"};
  app.require_subcommand(1);

  // export-scenario
  auto* cmd_export = app.add_subcommand(
      "export-scenario", "write the built-in intersection preset as a scenario file");
  std::string export_out;
  std::string preset_name = "intersection";
  cmd_export->add_option("--preset", preset_name, "preset name (intersection)");
  cmd_export->add_option("--out", export_out, "output scenario file")->required();
  CommonOptions export_opts;
  add_common(cmd_export, export_opts);

  // generate-dataset
  auto* cmd_generate =
      app.add_subcommand("generate-dataset", "expand the sweep and simulate every scene");
  std::string gen_scenario, gen_out;
  cmd_generate->add_option("--scenario", gen_scenario, "scenario file")->required();
  cmd_generate->add_option("--out", gen_out, "output dataset directory")->required();
  CommonOptions gen_opts;
  add_common(cmd_generate, gen_opts);

  // simulate
  auto* cmd_simulate =
      app.add_subcommand("simulate", "ground-truth POGs and AOG of a single scene");
  std::string sim_scene, sim_out;
  cmd_simulate->add_option("--scene", sim_scene, "scenario file")->required();
  cmd_simulate->add_option("--out", sim_out, "output directory")->required();
  CommonOptions sim_opts;
  add_common(cmd_simulate, sim_opts);

  // train
  auto* cmd_train = app.add_subcommand("train", "train the per-cell ensemble");
  std::string train_dataset, train_out;
  cmd_train->add_option("--dataset", train_dataset, "dataset directory")->required();
  cmd_train->add_option("--out", train_out, "model output file")->required();
  CommonOptions train_opts;
  add_common(cmd_train, train_opts);

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "estimate POGs for a scene");
  std::string pred_model, pred_scene, pred_out;
  cmd_predict->add_option("--model", pred_model, "model file")->required();
  cmd_predict->add_option("--scene", pred_scene, "scenario file")->required();
  cmd_predict->add_option("--out", pred_out, "output directory")->required();
  CommonOptions pred_opts;
  add_common(cmd_predict, pred_opts);

  // evaluate
  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "score the model against ground truth");
  std::string eval_model, eval_dataset, eval_out, eval_split = "validation";
  cmd_evaluate->add_option("--model", eval_model, "model file")->required();
  cmd_evaluate->add_option("--dataset", eval_dataset, "dataset directory")->required();
  cmd_evaluate->add_option("--out", eval_out, "report output directory")->required();
  cmd_evaluate->add_option("--split", eval_split, "train | validation | all");
  CommonOptions eval_opts;
  add_common(cmd_evaluate, eval_opts);

  // criticality
  auto* cmd_crit = app.add_subcommand("criticality", "scenario criticality for an ego");
  std::string crit_scene, crit_out;
  std::string crit_model;
  int crit_ego = 0;
  cmd_crit->add_option("--model", crit_model, "model file (adds an RF-estimated comparison)");
  cmd_crit->add_option("--scene", crit_scene, "scenario file")->required();
  cmd_crit->add_option("--ego", crit_ego, "ego object id")->required();
  cmd_crit->add_option("--out", crit_out, "also write the report to this file");
  CommonOptions crit_opts;
  add_common(cmd_crit, crit_opts);

  // benchmark
  auto* cmd_bench =
      app.add_subcommand("benchmark", "model-based vs estimator wall-clock comparison");
  std::string bench_model, bench_scene;
  int bench_reps = 10;
  cmd_bench->add_option("--model", bench_model, "model file")->required();
  cmd_bench->add_option("--scene", bench_scene, "scenario file")->required();
  cmd_bench->add_option("--reps", bench_reps, "repetitions (median reported)");
  CommonOptions bench_opts;
  add_common(cmd_bench, bench_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_export->parsed()) {
      resolve_config(export_opts);
      if (preset_name != "intersection") {
        throw ConfigError("unknown preset '" + preset_name + "'");
      }
      save_scenario(export_out, preset_intersection_scene(), preset_intersection_sweep());
      std::cout << "wrote " << export_out << '\n';
    } else if (cmd_generate->parsed()) {
      const RunConfig cfg = resolve_config(gen_opts);
      const GenerateSummary s =
          run_generate_dataset(gen_scenario, gen_out, cfg, gen_opts.seed);
      std::cout << "scenes " << s.n_scenes << " train " << s.n_train << " validation "
                << s.n_validation << '\n';
    } else if (cmd_simulate->parsed()) {
      const RunConfig cfg = resolve_config(sim_opts);
      run_simulate(sim_scene, sim_out, cfg);
      std::cout << "wrote " << sim_out << '\n';
    } else if (cmd_train->parsed()) {
      const RunConfig cfg = resolve_config(train_opts);
      run_train(train_dataset, train_out, cfg);
      std::cout << "wrote " << train_out << '\n';
    } else if (cmd_predict->parsed()) {
      resolve_config(pred_opts);
      run_predict(pred_model, pred_scene, pred_out);
      std::cout << "wrote " << pred_out << '\n';
    } else if (cmd_evaluate->parsed()) {
      const RunConfig cfg = resolve_config(eval_opts);
      const EvaluateSummary s = run_evaluate(eval_model, eval_dataset, eval_out, cfg, eval_split);
      std::cout << "scenes " << s.n_scenes << '\n';
      for (const auto& agg : s.per_instant) {
        std::cout << "t_pred " << fmt(agg.t_pred) << " eps_low "
                  << (agg.eps_low_mean ? fmt(*agg.eps_low_mean) : "-") << " eps_med "
                  << (agg.eps_med_mean ? fmt(*agg.eps_med_mean) : "-") << " eps_high "
                  << (agg.eps_high_mean ? fmt(*agg.eps_high_mean) : "-") << '\n';
      }
    } else if (cmd_crit->parsed()) {
      const RunConfig cfg = resolve_config(crit_opts);
      std::optional<fs::path> model;
      if (!crit_model.empty()) model = crit_model;
      const CriticalityOutcome outcome = run_criticality(crit_scene, crit_ego, cfg, model);
      print_criticality(std::cout, outcome);
      if (!crit_out.empty()) {
        std::ostringstream os;
        print_criticality(os, outcome);
        io_detail::write_text_file(crit_out, os.str());
      }
    } else if (cmd_bench->parsed()) {
      const RunConfig cfg = resolve_config(bench_opts);
      const PogEstimator est = load_model(bench_model);
      const ScenarioFile sf = load_scenario(bench_scene);
      const BenchmarkResult r = benchmark(sf.scene, est, cfg.hypotheses, bench_reps);
      std::cout << "t_model_s " << fmt(r.t_model_s) << "\nt_ml_s " << fmt(r.t_ml_s)
                << "\nspeedup " << fmt(r.speedup) << "\nrepetitions " << r.repetitions
                << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
