#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "pog/error.hpp"
#include "pog/forest.hpp"
#include "pog/grid.hpp"
#include "pog/hypotheses.hpp"
#include "pog/quantization.hpp"

namespace pog {

/// Quality of one estimated POG against the quantized ground truth.
/// epsilon is the root mean squared class error over the whole grid,
/// normalized by the cardinality K of the symmetric difference of the
/// nonzero-cell sets. Category errors restrict both the squared sum and the
/// mismatch count to cells whose truth class is in the category.
struct QualityReport {
  double epsilon = 0.0;
  std::optional<double> eps_low;   // truth class 0.25
  std::optional<double> eps_med;   // truth classes 0.5, 0.75
  std::optional<double> eps_high;  // truth class 1.0
  double mean_error_per_cell = 0.0;  // squared-error sum divided by I*J
  std::size_t k_mismatch = 0;        // |B union D minus B intersect D|
};

inline QualityReport quality(const PredictedOccupancyGrid& estimated,
                             const PredictedOccupancyGrid& truth_quantized,
                             const std::vector<CellIndex>& limit_cells = {}) {
  if (!(estimated.spec == truth_quantized.spec)) {
    throw Error("quality: grid specs differ");
  }
  const GridSpec& spec = estimated.spec;
  std::vector<std::uint8_t> excluded(spec.cell_count(), 0);
  for (const CellIndex c : limit_cells) excluded[spec.index(c)] = 1;

  double sum_sq = 0.0;
  std::size_t k = 0;
  double sum_low = 0.0, sum_med = 0.0, sum_high = 0.0;
  std::size_t k_low = 0, k_med = 0, k_high = 0;
  bool has_low = false, has_med = false, has_high = false;

  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    if (excluded[c]) continue;
    const double est = estimated.p[c];
    const double truth = truth_quantized.p[c];
    const double d2 = (est - truth) * (est - truth);
    sum_sq += d2;
    if ((est != 0.0) != (truth != 0.0)) ++k;

    if (truth == 0.25) {
      has_low = true;
      sum_low += d2;
      if (est != truth) ++k_low;
    } else if (truth == 0.5 || truth == 0.75) {
      has_med = true;
      sum_med += d2;
      if (est != truth) ++k_med;
    } else if (truth == 1.0) {
      has_high = true;
      sum_high += d2;
      if (est != truth) ++k_high;
    }
  }

  QualityReport report;
  report.k_mismatch = k;
  // K can be zero with a nonzero sum (all mismatches inside the shared
  // support); the count is floored at one to keep epsilon finite.
  report.epsilon = sum_sq > 0.0 ? std::sqrt(sum_sq / double(std::max<std::size_t>(k, 1)))
                                : 0.0;
  if (has_low) report.eps_low = k_low ? std::sqrt(sum_low / double(k_low)) : 0.0;
  if (has_med) report.eps_med = k_med ? std::sqrt(sum_med / double(k_med)) : 0.0;
  if (has_high) report.eps_high = k_high ? std::sqrt(sum_high / double(k_high)) : 0.0;
  report.mean_error_per_cell = sum_sq / double(spec.cell_count());
  return report;
}

constexpr double kHistogramBinWidth = 0.05;
constexpr int kHistogramBins = 20;  // covers [0, 1]

inline int histogram_bin(double v) {
  return std::clamp(int(std::floor(v / kHistogramBinWidth)), 0, kHistogramBins - 1);
}

/// Aggregate over the test scenes of one prediction instance: category means
/// over the scenes where the category occurs, plus histograms of the nonzero
/// quantized truth values and of the per-scene epsilon values.
struct AggregateReport {
  double t_pred = 0.0;
  std::size_t n_scenes = 0;
  std::optional<double> eps_low_mean;
  std::optional<double> eps_med_mean;
  std::optional<double> eps_high_mean;
  double eps_mean = 0.0;
  std::vector<std::size_t> pq_histogram = std::vector<std::size_t>(kHistogramBins, 0);
  std::vector<std::size_t> eps_histogram = std::vector<std::size_t>(kHistogramBins, 0);
};

inline AggregateReport aggregate(const std::vector<QualityReport>& reports,
                                 const std::vector<const PredictedOccupancyGrid*>& truths,
                                 double t_pred) {
  if (reports.empty()) throw Error("aggregate: no reports");
  if (truths.size() != reports.size()) throw Error("aggregate: report/truth count mismatch");

  AggregateReport agg;
  agg.t_pred = t_pred;
  agg.n_scenes = reports.size();
  double low = 0, med = 0, high = 0, eps = 0;
  std::size_t n_low = 0, n_med = 0, n_high = 0;
  for (const auto& r : reports) {
    eps += r.epsilon;
    agg.eps_histogram[std::size_t(histogram_bin(std::min(r.epsilon, 1.0)))]++;
    if (r.eps_low) {
      low += *r.eps_low;
      ++n_low;
    }
    if (r.eps_med) {
      med += *r.eps_med;
      ++n_med;
    }
    if (r.eps_high) {
      high += *r.eps_high;
      ++n_high;
    }
  }
  agg.eps_mean = eps / double(reports.size());
  if (n_low) agg.eps_low_mean = low / double(n_low);
  if (n_med) agg.eps_med_mean = med / double(n_med);
  if (n_high) agg.eps_high_mean = high / double(n_high);

  for (const auto* truth : truths) {
    for (const double p : truth->p) {
      if (p != 0.0) agg.pq_histogram[std::size_t(histogram_bin(p))]++;
    }
  }
  return agg;
}

/// Scenario criticality from two POG stacks: per cell the product of the
/// ego-occupancy and other-occupancy probabilities, per instance the maximum
/// cell, overall the maximum instance.
struct CriticalityReport {
  std::vector<double> instants;
  std::vector<double> c_per_instant;
  std::vector<CellIndex> argmax_cell;
  double c_total = 0.0;
  std::size_t argmax_instant = 0;
};

inline CriticalityReport criticality(const std::vector<PredictedOccupancyGrid>& ego_stack,
                                     const std::vector<PredictedOccupancyGrid>& others_stack) {
  if (ego_stack.size() != others_stack.size() || ego_stack.empty()) {
    throw Error("criticality: stacks must be non-empty and of equal size");
  }
  CriticalityReport report;
  for (std::size_t k = 0; k < ego_stack.size(); ++k) {
    const auto& ego = ego_stack[k];
    const auto& other = others_stack[k];
    if (!(ego.spec == other.spec) || std::abs(ego.t_pred - other.t_pred) > 1e-9) {
      throw Error("criticality: stack mismatch at instance " + std::to_string(k));
    }
    double best = 0.0;
    std::size_t best_cell = 0;
    for (std::size_t c = 0; c < ego.p.size(); ++c) {
      const double v = ego.p[c] * other.p[c];
      if (v > best) {
        best = v;
        best_cell = c;
      }
    }
    report.instants.push_back(ego.t_pred);
    report.c_per_instant.push_back(best);
    report.argmax_cell.push_back(
        {int(best_cell % std::size_t(ego.spec.cols)), int(best_cell / std::size_t(ego.spec.cols))});
    if (best > report.c_total) {
      report.c_total = best;
      report.argmax_instant = k;
    }
  }
  return report;
}

/// Wall-clock comparison of model-based POG construction against estimator
/// inference on the same scene; medians over the repetitions.
struct BenchmarkResult {
  double t_model_s = 0.0;
  double t_ml_s = 0.0;
  double speedup = 0.0;
  int repetitions = 0;
};

inline BenchmarkResult benchmark(const Scene& scene, const PogEstimator& estimator,
                                 const HypothesisConfig& hcfg, int repetitions = 10) {
  if (repetitions < 1) throw Error("benchmark: need at least one repetition");
  const GridSpec& spec = estimator.spec;
  const std::vector<double>& instants = estimator.instants;
  const AugmentedOccupancyGrid aog = build_aog(scene, spec);

  using clock = std::chrono::steady_clock;
  std::vector<double> model_times, ml_times;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    {
      const auto limits = road_limit_cells(scene.road, spec);
      std::vector<std::vector<HypothesisSet>> per_object;
      std::vector<Footprint> footprints;
      for (const auto& obj : scene.objects) {
        per_object.push_back(hypothesis_sets(scene, obj.id, instants, hcfg));
        footprints.push_back(obj.footprint);
      }
      for (std::size_t k = 0; k < instants.size(); ++k) {
        std::vector<HypothesisSet> sets;
        for (const auto& sets_of_object : per_object) sets.push_back(sets_of_object[k]);
        volatile double sink = build_pog(sets, footprints, spec, instants[k], limits).p[0];
        (void)sink;
      }
    }
    const auto t1 = clock::now();
    {
      for (const double t : instants) {
        volatile double sink = estimator.estimate(aog, t).p[0];
        (void)sink;
      }
    }
    const auto t2 = clock::now();
    model_times.push_back(std::chrono::duration<double>(t1 - t0).count());
    ml_times.push_back(std::chrono::duration<double>(t2 - t1).count());
  }
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  BenchmarkResult result;
  result.t_model_s = median(model_times);
  result.t_ml_s = median(ml_times);
  result.speedup = result.t_model_s / result.t_ml_s;
  result.repetitions = repetitions;
  return result;
}

}  // namespace pog
