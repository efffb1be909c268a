#include "mrfg/metrics.hpp"

namespace mrfg {

MetricReport compute_metrics(const std::vector<StanceLabel>& gold,
                             const std::vector<StanceLabel>& predicted) {
  if (gold.size() != predicted.size()) throw Error("metrics: length mismatch");
  if (gold.empty()) throw Error("metrics: empty input");

  MetricReport r;
  r.n = gold.size();
  for (size_t i = 0; i < gold.size(); ++i)
    r.confusion[class_index(gold[i])][class_index(predicted[i])] += 1;

  size_t correct = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    correct += r.confusion[c][c];
    size_t tp = r.confusion[c][c];
    size_t fp = 0, fn = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    r.precision[c] = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall[c] = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double pr = r.precision[c] + r.recall[c];
    r.f1[c] = pr > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
  }
  r.f_favor = r.f1[class_index(StanceLabel::Favor)];
  r.f_against = r.f1[class_index(StanceLabel::Against)];
  r.f_avg = (r.f_favor + r.f_against) / 2.0;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  return r;
}

double cohen_kappa(const std::vector<StanceLabel>& a, const std::vector<StanceLabel>& b,
                   bool three_class) {
  if (a.size() != b.size()) throw Error("kappa: length mismatch");
  if (a.empty()) throw Error("kappa: empty input");

  std::vector<std::pair<int, int>> pairs;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!three_class && (a[i] == StanceLabel::None || b[i] == StanceLabel::None)) continue;
    pairs.emplace_back(class_index(a[i]), class_index(b[i]));
  }
  if (pairs.empty()) throw Error("kappa: no instances left after class restriction");

  const double n = static_cast<double>(pairs.size());
  std::array<double, kNumClasses> ma{}, mb{};
  double agree = 0.0;
  for (const auto& [x, y] : pairs) {
    ma[x] += 1.0;
    mb[y] += 1.0;
    if (x == y) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (int c = 0; c < kNumClasses; ++c) p_e += (ma[c] / n) * (mb[c] / n);
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace mrfg
