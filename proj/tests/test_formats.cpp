#include "pog/io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cstring>
#include <random>
#include <filesystem>

#include "pog/config.hpp"
#include "pog/pipeline.hpp"
#include "pog/rng.hpp"

using namespace pog;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pogcast_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scenario file round-trips value-identically") {
  TempDir tmp;
  const Scene scene = preset_intersection_scene();
  const SweepSpec sweep = preset_intersection_sweep();

  const fs::path f1 = tmp.path / "a.json";
  const fs::path f2 = tmp.path / "b.json";
  save_scenario(f1, scene, sweep);
  const ScenarioFile loaded = load_scenario(f1);
  save_scenario(f2, loaded.scene, loaded.sweep);
  const ScenarioFile again = load_scenario(f2);

  // canonical serialization equality is value identity
  CHECK(scenario_to_json(loaded.scene, loaded.sweep) ==
        scenario_to_json(again.scene, again.sweep));
  CHECK(scenario_to_json(scene, sweep) == scenario_to_json(loaded.scene, loaded.sweep));

  CHECK(loaded.scene.objects.size() == 3);
  CHECK(loaded.sweep.scene_count() == 972);
  CHECK(loaded.scene.ego_id == scene.ego_id);
}

TEST_CASE("malformed scenario files are rejected with context") {
  TempDir tmp;
  const fs::path f = tmp.path / "bad.json";
  io_detail::write_text_file(f, "{\"schema_version\": 1, \"bogus\": 3}\n");
  CHECK_THROWS_AS(load_scenario(f), ConfigError);
  CHECK_THROWS_AS(load_scenario(tmp.path / "missing.json"), ConfigError);
}

TEST_CASE("grid binary files round-trip bit-exactly") {
  TempDir tmp;
  GridSpec spec;
  spec.cols = 12;
  spec.rows = 9;
  spec.origin_x = -3.25;
  Rng rng(1);

  AugmentedOccupancyGrid aog(spec);
  for (auto& v : aog.data) v = rng.uniform(-10.0, 10.0);
  save_aog_binary(tmp.path / "g.aog.bin", aog);
  const AugmentedOccupancyGrid aog2 = load_aog_binary(tmp.path / "g.aog.bin");
  CHECK(aog2.spec == spec);
  CHECK(bits_equal(aog.data, aog2.data));

  PredictedOccupancyGrid pog(spec, 1.5);
  for (auto& v : pog.p) v = rng.uniform();
  save_pog_binary(tmp.path / "g.pog.bin", pog);
  const PredictedOccupancyGrid pog2 = load_pog_binary(tmp.path / "g.pog.bin");
  CHECK(pog2.t_pred == 1.5);
  CHECK(bits_equal(pog.p, pog2.p));

  CHECK_THROWS_AS(load_pog_binary(tmp.path / "g.aog.bin"), ConfigError);
}

TEST_CASE("grid text files round-trip bit-exactly") {
  TempDir tmp;
  GridSpec spec;
  spec.cols = 7;
  spec.rows = 5;
  Rng rng(2);

  AugmentedOccupancyGrid aog(spec);
  for (auto& v : aog.data) v = rng.uniform(-5.0, 5.0);
  aog.data[3] = 0.1;  // not exactly representable, exercises %.17g
  save_aog_text(tmp.path / "g.aog.txt", aog);
  const AugmentedOccupancyGrid aog2 = load_aog_text(tmp.path / "g.aog.txt");
  CHECK(bits_equal(aog.data, aog2.data));

  PredictedOccupancyGrid pog(spec, 0.5);
  for (auto& v : pog.p) v = rng.uniform();
  save_pog_text(tmp.path / "g.pog.txt", pog);
  const PredictedOccupancyGrid pog2 = load_pog_text(tmp.path / "g.pog.txt");
  CHECK(pog2.t_pred == 0.5);
  CHECK(bits_equal(pog.p, pog2.p));
}

TEST_CASE("model container round-trips predictions and supports lazy reads") {
  TempDir tmp;
  GridSpec spec;
  spec.cols = 5;
  spec.rows = 4;
  spec.cell_length = 1.0;
  spec.cell_width = 1.0;

  // small trained estimator with a mix of stubs and forests
  std::vector<AugmentedOccupancyGrid> aogs;
  std::vector<std::vector<PredictedOccupancyGrid>> targets;
  Rng rng(7);
  for (int s = 0; s < 8; ++s) {
    Scene scene;
    TrafficObject car;
    car.id = 1;
    car.state.X = 0.7 + 0.5 * s;
    car.state.Y = 2.0;
    car.state.v = 3.0 + s;
    car.footprint = {1.5, 0.8};
    scene.objects.push_back(car);
    aogs.push_back(build_aog(scene, spec));
    PredictedOccupancyGrid t1(spec, 0.5);
    t1.at({s % 5, 2}) = 0.25 * double(1 + rng.below(4));
    PredictedOccupancyGrid t2(spec, 1.0);
    t2.at({(s + 1) % 5, 2}) = 0.25 * double(1 + rng.below(4));
    targets.push_back({t1, t2});
  }
  ForestConfig cfg;
  cfg.n_trees = 9;
  cfg.seed = 42;
  const PogEstimator est = PogEstimator::train(aogs, targets, {0.5, 1.0}, cfg, {}, 1);

  const fs::path file = tmp.path / "model.pogm";
  save_model(file, est, 111, 222);
  const PogEstimator loaded = load_model(file);

  CHECK(loaded.spec == est.spec);
  CHECK(loaded.instants == est.instants);
  for (const auto& aog : aogs) {
    for (const double t : {0.5, 1.0}) {
      CHECK(loaded.estimate(aog, t).p == est.estimate(aog, t).p);
    }
  }
  CHECK(model_hashes(file) == std::pair<std::uint64_t, std::uint64_t>{111, 222});

  // lazy per-cell read through the offset directory
  for (const std::size_t slot : {std::size_t(0), std::size_t(7), std::size_t(21)}) {
    const CellModel lazy = load_model_cell(file, slot / spec.cell_count(),
                                           slot % spec.cell_count());
    const CellModel& eager = loaded.cells[slot];
    CHECK(lazy.is_stub() == eager.is_stub());
    if (!lazy.is_stub()) {
      CHECK(lazy.forest.trees.size() == eager.forest.trees.size());
      const auto& x = aogs[0].features();
      CHECK(lazy.forest.predict(x).class_index == eager.forest.predict(x).class_index);
    } else {
      CHECK(lazy.constant_class == eager.constant_class);
    }
  }
}

TEST_CASE("config round-trips, hashes stably and rejects unknown fields") {
  TempDir tmp;
  RunConfig cfg;
  cfg.grid.cols = 20;
  cfg.grid.rows = 20;
  cfg.grid.cell_length = 2.0;
  cfg.grid.cell_width = 2.0;
  cfg.forest.n_trees = 50;
  cfg.seed = 99;

  const fs::path f = tmp.path / "config.json";
  io_detail::write_text_file(f, config_to_json(cfg).dump(2) + "\n");
  const RunConfig loaded = load_config(f);
  CHECK(config_hash(loaded) == config_hash(cfg));
  CHECK(loaded.grid == cfg.grid);
  CHECK(loaded.forest.n_trees == 50);

  io_detail::write_text_file(tmp.path / "bad.json", "{\"grdi\": {}}\n");
  CHECK_THROWS_AS(load_config(tmp.path / "bad.json"), ConfigError);

  // invalid values are rejected
  RunConfig broken = cfg;
  broken.instants = {1.0, 0.5};
  io_detail::write_text_file(tmp.path / "bad2.json", config_to_json(broken).dump(2) + "\n");
  CHECK_THROWS_AS(load_config(tmp.path / "bad2.json"), ConfigError);

  RunConfig even_lat = cfg;
  even_lat.hypotheses.n_lat = 4;
  io_detail::write_text_file(tmp.path / "bad3.json", config_to_json(even_lat).dump(2) + "\n");
  CHECK_THROWS_AS(load_config(tmp.path / "bad3.json"), ConfigError);
}

TEST_CASE("manifest round-trips") {
  TempDir tmp;
  DatasetManifest m;
  m.config_hash = 12345;
  m.seed = 6;
  m.grid.cols = 10;
  m.grid.rows = 12;
  m.instants = {0.5, 1.0, 2.0};
  m.limit_cells = {{0, 1}, {2, 3}};
  DatasetManifest::SceneEntry e;
  e.index = 0;
  e.split = "train";
  e.aog = "scene_000000.aog.bin";
  e.pogs = {"scene_000000.pog_0.bin"};
  m.scenes.push_back(e);

  save_manifest(tmp.path / "manifest.json", m);
  const DatasetManifest l = load_manifest(tmp.path / "manifest.json");
  CHECK(l.config_hash == m.config_hash);
  CHECK(l.seed == m.seed);
  CHECK(l.grid == m.grid);
  CHECK(l.instants == m.instants);
  CHECK(l.limit_cells == m.limit_cells);
  REQUIRE(l.scenes.size() == 1);
  CHECK(l.scenes[0].split == "train");
  CHECK(l.dataset_hash() == m.dataset_hash());
}
