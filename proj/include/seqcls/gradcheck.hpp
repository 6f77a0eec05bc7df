#pragma once

#include "seqcls/params.hpp"
#include "seqcls/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace seqcls {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_segment;
  Index worst_index = -1;
  int probes = 0;
  bool pass = false;
};

/// Compares the supplied analytic gradient against central finite differences
/// of `loss` on randomly probed coordinates. Relative error is
/// |a - n| / max(1, |a| + |n|). The closure must be deterministic; two
/// evaluations at the unperturbed point are compared and a mismatch throws.
GradCheckReport check_gradients(const std::function<double(const ParamStore&)>& loss,
                                const ParamStore& params, const ParamStore& analytic,
                                int probe_count, double h, double tol, Rng& rng);

struct ArchitectureCheck {
  std::string name;
  GradCheckReport report;
};

/// End-to-end loss gradient checks (encoder + head + BCE) for every
/// architecture preset, on small random problems.
std::vector<ArchitectureCheck> run_architecture_gradchecks(std::uint64_t seed,
                                                           int probe_count = 200,
                                                           double h = 1e-5,
                                                           double tol = 1e-5);

}  // namespace seqcls
