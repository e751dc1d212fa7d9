#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffit/expr.hpp"
#include "ffit/fastmath.hpp"
#include "ffit/graph.hpp"

namespace ffit {

using fastmath::MathPolicy;

enum class PdfKind { Gaussian, Exponential, ChiSquare, JohnsonSU, WeightedSum, Expression };

// Result of validating the current parameter values of a PDF.
struct ParamCheck {
  struct Issue {
    std::string param;
    std::string reason;
  };
  std::vector<Issue> issues;

  bool ok() const { return issues.empty(); }
  std::string describe() const;
};

// A PDF bound to graph nodes. Parameter order by kind:
//   Gaussian:    mu, sigma
//   Exponential: c
//   ChiSquare:   k
//   JohnsonSU:   mu, lambda, gamma, delta
//   WeightedSum: components + n-1 fraction nodes
//   Expression:  var_nodes aligned with the compiled program's variables
//                (the observable's entry points at the observable node)
struct PdfSpec {
  PdfKind kind = PdfKind::Gaussian;
  std::string name;
  NodeId observable = 0;
  std::vector<NodeId> parameters;
  std::vector<PdfSpec> components;
  std::vector<NodeId> fractions;
  expr::Program program;
  std::vector<NodeId> expr_var_nodes;

  ParamCheck check_params(const Graph& g) const;

  // Unnormalized density at one point. Kernel math follows `policy`;
  // the scalar graph path always evaluates with Precise.
  double eval_unnorm(double x, const Graph& g,
                     MathPolicy policy = MathPolicy::Precise) const;

  // One pass over a full column. Parameters are read once into locals at
  // kernel entry. `kernel_calls`, when given, counts kernel loop launches
  // (not entries) for call-accounting tests.
  void eval_batch(std::span<const double> xs, std::span<double> out, const Graph& g,
                  MathPolicy policy, std::uint64_t* kernel_calls = nullptr) const;

  // Closed-form integral of eval_unnorm over [lo, hi] where one exists
  // (Gaussian, Exponential, WeightedSum of such); nullopt otherwise.
  std::optional<double> analytic_integral(double lo, double hi, const Graph& g) const;

  // Upper-bound estimate for accept/reject: 1024-point grid max * 1.1.
  double max_hint(double lo, double hi, const Graph& g) const;

  // All parameter nodes reachable from this spec (depth-first, with
  // duplicates removed); used to wire graph dependencies.
  std::vector<NodeId> all_parameter_nodes() const;
};

void require_valid_params(const PdfSpec& spec, const Graph& g);

}  // namespace ffit
