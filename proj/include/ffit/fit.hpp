#pragma once

#include <string>
#include <vector>

#include "ffit/eval.hpp"
#include "ffit/model.hpp"

namespace ffit {

struct FitOptions {
  EvalMode mode = EvalMode::Scalar;
  double tolerance = 1e-8;  // simplex NLL spread for convergence
  int max_iterations = 10000;
  bool verbose = false;
  bool record_trace = false;  // keep the per-iteration best-NLL sequence
};

struct FittedParameter {
  std::string name;
  double value = 0.0;
  double uncertainty = 0.0;
};

struct FitResult {
  bool converged = false;
  double nll_min = 0.0;
  std::vector<FittedParameter> parameters;
  std::uint64_t n_nll_calls = 0;
  double wall_seconds = 0.0;
  bool uncertainties_valid = true;  // false when the Hessian was not invertible
  std::vector<double> trace;        // best NLL per iteration, if recorded
};

// Maps the unbounded minimizer coordinate u to a parameter value strictly
// inside (lower, upper) at interior u, hitting the bounds at u = +-pi/2:
// p = lower + (upper - lower) * (sin(u) + 1) / 2.
double bound_transform(double u, double lower, double upper);
double bound_transform_inverse(double p, double lower, double upper);

// NLL minimization over the model's non-constant parameters: Nelder-Mead
// in transformed space (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5; deterministic initial simplex), Hessian-based uncertainties
// from central differences (step 1e-4 in u-space) mapped back through the
// transform's Jacobian. Fitted values and uncertainties are written back
// into the graph.
FitResult fit_to(Model& model, const DataSet& ds, const FitOptions& options = {});

}  // namespace ffit
