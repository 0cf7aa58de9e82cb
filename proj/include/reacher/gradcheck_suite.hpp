#pragma once

#include <string>
#include <vector>

namespace reacher {

struct GradCheckItem {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckItem> items;
  double worst() const;
  bool pass(double tol = 1e-4) const { return worst() <= tol; }
};

// Central-difference verification (double precision, h = 1e-5) of every
// differentiable op and of an 8x8 miniature of the full architecture.
GradCheckReport run_gradcheck_suite();

}  // namespace reacher
