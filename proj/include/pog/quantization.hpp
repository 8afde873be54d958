#pragma once

#include <cmath>
#include <vector>

#include "pog/error.hpp"
#include "pog/grid.hpp"

namespace pog {

/// Ordered occupancy classes; degree-of-likeliness values from 0 to 1.
struct QuantizationSet {
  std::vector<double> values = {0.0, 0.25, 0.5, 0.75, 1.0};

  int size() const { return int(values.size()); }
  double value(int index) const { return values.at(std::size_t(index)); }

  /// Nearest class; exact midpoints round to the higher (more occupied) class.
  int index_of(double p) const {
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) {
      throw Error("quantize: probability outside [0, 1]");
    }
    int best = 0;
    double best_d = std::abs(p - values[0]);
    for (int k = 1; k < size(); ++k) {
      const double d = std::abs(p - values[std::size_t(k)]);
      if (d <= best_d) {
        best = k;
        best_d = d;
      }
    }
    return best;
  }

  double quantize(double p) const { return values[std::size_t(index_of(p))]; }
};

inline PredictedOccupancyGrid quantize(const PredictedOccupancyGrid& pog,
                                       const QuantizationSet& qset = {}) {
  PredictedOccupancyGrid out = pog;
  for (auto& p : out.p) p = qset.quantize(p);
  return out;
}

inline std::vector<int> quantize_labels(const PredictedOccupancyGrid& pog,
                                        const QuantizationSet& qset = {}) {
  std::vector<int> out(pog.p.size());
  for (std::size_t k = 0; k < pog.p.size(); ++k) out[k] = qset.index_of(pog.p[k]);
  return out;
}

}  // namespace pog
