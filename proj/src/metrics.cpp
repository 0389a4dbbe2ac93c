#include "ismap/metrics.hpp"

namespace ismap {

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0)
    throw Error("compute_metrics: negative count");
  const double n = static_cast<double>(cm.total());
  if (n <= 0.0) throw Error("compute_metrics: empty confusion matrix");

  Metrics m;
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn);
  const double tn = static_cast<double>(cm.tn);

  if (tp + fp > 0.0)
    m.precision = tp / (tp + fp);
  else
    m.degenerate = true;
  if (tp + fn > 0.0)
    m.recall = tp / (tp + fn);
  else
    m.degenerate = true;
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.degenerate = true;

  const double po = (tp + tn) / n;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  if (1.0 - pe > 0.0)
    m.kappa = (po - pe) / (1.0 - pe);
  else
    m.degenerate = true;
  return m;
}

}  // namespace ismap
