#pragma once
// Stance metrics: per-class F1, F_avg over Favor/Against, accuracy, and
// Cohen's kappa for annotator agreement.

#include <array>
#include <vector>

#include "mrfg/core.hpp"

namespace mrfg {

struct MetricReport {
  std::array<std::array<size_t, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
  double f_favor = 0.0;
  double f_against = 0.0;
  double f_avg = 0.0;  // mean of F_favor and F_against; None excluded
  double accuracy = 0.0;
  size_t n = 0;
};

MetricReport compute_metrics(const std::vector<StanceLabel>& gold,
                             const std::vector<StanceLabel>& predicted);

// Chance-corrected agreement (p_o - p_e) / (1 - p_e). By default only
// instances where both annotators chose Favor or Against are counted; set
// three_class to keep everything.
double cohen_kappa(const std::vector<StanceLabel>& a, const std::vector<StanceLabel>& b,
                   bool three_class = false);

}  // namespace mrfg
