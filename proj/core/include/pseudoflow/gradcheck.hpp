#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pseudoflow/models.hpp"
#include "pseudoflow/tape.hpp"

namespace pseudoflow {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int cases = 0;
};

struct GradCheckReport {
  double tolerance = 1e-4;
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    for (const auto& e : entries)
      if (!(e.max_rel_err < tolerance)) return false;
    return true;
  }
  std::string summary() const;
};

// Builds a scalar from the given leaves; `tape` is null during the finite
// difference re-evaluations.
using GraphBuilder = std::function<Tensor64(Tape64* tape, std::vector<Tensor64>& leaves)>;

// Central differences with step 1e-5 * (|value| + 1) against the analytic
// tape gradient. Relative error uses an absolute floor of 1e-3 in the
// denominator so near-zero gradients do not amplify finite difference noise.
double finite_difference_max_rel_err(const GraphBuilder& build, std::vector<Tensor64> leaves);

// Checks d mean(net(input)) / d parameter for every parameter; one report
// entry per parameter. A network without parameters yields an empty report.
GradCheckReport check_gradients(NetworkT<double>& net, const TensorT<double>& input,
                                double tolerance = 1e-4);

// The registered-op suite: every autodiff op on random small tensors plus a
// two-resblock composite network, `cases_per_op` random cases each.
GradCheckReport check_op_suite(int cases_per_op, double tolerance, std::uint64_t seed);

}  // namespace pseudoflow
