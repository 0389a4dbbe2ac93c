#pragma once

#include "ismap/errors.hpp"

namespace ismap {

// Binary confusion counts with favela as the positive class.
struct ConfusionMatrix {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;

  long long total() const { return tp + fp + fn + tn; }
  void add(int truth, int predicted) {
    if (truth == 1)
      predicted == 1 ? ++tp : ++fn;
    else
      predicted == 1 ? ++fp : ++tn;
  }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  // Set when any denominator (tp+fp, tp+fn, precision+recall, 1-p_e) was
  // zero; the affected metric is reported as 0 instead of failing the sweep.
  bool degenerate = false;
};

// precision = tp/(tp+fp); recall = tp/(tp+fn); f1 = harmonic mean;
// kappa = (p_o - p_e)/(1 - p_e), p_o = (tp+tn)/N,
// p_e = [(tp+fp)(tp+fn) + (fn+tn)(fp+tn)] / N^2.
// Throws on an empty matrix.
Metrics compute_metrics(const ConfusionMatrix& cm);

}  // namespace ismap
