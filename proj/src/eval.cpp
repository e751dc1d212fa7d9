#include "ffit/eval.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ffit/model.hpp"

namespace ffit {

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a, double b,
                       double fa, double fm, double fb, double whole, double abs_tol,
                       double rel_tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm)) {
    throw Error(ErrorCode::Numeric, "non-finite integrand at x=" + std::to_string(lm));
  }
  if (!std::isfinite(frm)) {
    throw Error(ErrorCode::Numeric, "non-finite integrand at x=" + std::to_string(rm));
  }
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 ||
      std::fabs(delta) <= 15.0 * std::max(abs_tol, rel_tol * std::fabs(left + right))) {
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, rel_tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace

double integrate_adaptive_simpson(const std::function<double(double)>& f, double lo,
                                  double hi, double abs_tol, double rel_tol,
                                  int max_depth) {
  if (!(lo < hi)) {
    throw Error(ErrorCode::Usage, "integration range must satisfy lo < hi");
  }
  // Pre-subdivide so features much narrower than the range (sharp peaks
  // away from the sampled endpoints) cannot slip between the initial
  // sample points of a single adaptive panel.
  constexpr int kPanels = 32;
  const double width = (hi - lo) / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double a = lo + p * width;
    const double b = p == kPanels - 1 ? hi : a + width;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    for (const auto [x, v] : {std::pair{a, fa}, {m, fm}, {b, fb}}) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::Numeric, "non-finite integrand at x=" + std::to_string(x));
      }
    }
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_recurse(f, a, b, fa, fm, fb, whole, abs_tol / kPanels, rel_tol,
                             max_depth);
  }
  return total;
}

double normalization(const PdfSpec& spec, double lo, double hi, const Graph& g) {
  double result;
  if (const auto analytic = spec.analytic_integral(lo, hi, g)) {
    result = *analytic;
  } else {
    result = integrate_adaptive_simpson(
        [&](double x) { return spec.eval_unnorm(x, g); }, lo, hi, 1e-10 * (hi - lo),
        1e-10, 60);
  }
  if (!(result > 0.0) || !std::isfinite(result)) {
    throw Error(ErrorCode::Numeric,
                "degenerate PDF '" + spec.name + "': normalization integral is " +
                    std::to_string(result));
  }
  return result;
}

void generic_batch_fallback(const std::function<double(double)>& scalar_pdf,
                            std::span<const double> xs, std::span<double> out) {
  if (xs.size() != out.size()) {
    throw Error(ErrorCode::Usage, "generic_batch_fallback: length mismatch");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = scalar_pdf(xs[i]);
}

NllValue nll_scalar(Model& model, const DataSet& ds) {
  require_valid_params(model.pdf, model.graph);
  const std::span<const double> xs = ds.column(model.obs_name());
  NllValue out;
  out.n_entries = xs.size();
  const std::uint64_t evals0 = model.graph.total_eval_count();
  double value = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    model.graph.set_observable_value(model.observable, xs[i]);
    const double p = model.graph.evaluate_single(model.prob_node);
    if (!(p > 0.0) || !std::isfinite(p)) {
      out.first_invalid = static_cast<std::ptrdiff_t>(i);
      out.value = std::numeric_limits<double>::infinity();
      out.n_evaluations = model.graph.total_eval_count() - evals0;
      return out;
    }
    value += -std::log(p);
  }
  out.value = value;
  out.n_evaluations = model.graph.total_eval_count() - evals0;
  return out;
}

NllValue nll_batch(Model& model, const DataSet& ds, MathPolicy policy) {
  require_valid_params(model.pdf, model.graph);
  const std::span<const double> xs = ds.column(model.obs_name());
  NllValue out;
  out.n_entries = xs.size();
  if (xs.empty()) return out;

  std::uint64_t calls = 0;
  // Normalization through the graph node so the constant-branch cache and
  // its eval_count instrumentation are shared with scalar mode.
  const double norm = model.graph.evaluate_single(model.norm_node);
  const std::size_t n = xs.size();
  std::vector<double> probs(n);
  model.pdf.eval_batch(xs, probs, model.graph, policy, &calls);

  double* __restrict p = probs.data();
  for (std::size_t i = 0; i < n; ++i) p[i] = p[i] / norm;
  ++calls;

  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] > 0.0) || !std::isfinite(p[i])) {
      out.first_invalid = static_cast<std::ptrdiff_t>(i);
      out.value = std::numeric_limits<double>::infinity();
      out.n_evaluations = calls;
      return out;
    }
  }

  // Same per-entry expression and the same fixed left-to-right reduction
  // as scalar mode, so Precise-policy parity is bitwise.
  std::vector<double> logs(n);
  if (policy == MathPolicy::Fast) {
    fastmath::fast_log_batch(probs, logs);
  } else {
    const double* __restrict src = probs.data();
    double* __restrict dst = logs.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::log(src[i]);
  }
  ++calls;
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += -logs[i];
  out.value = value;
  out.n_evaluations = calls;
  return out;
}

NllValue nll(Model& model, const DataSet& ds, EvalMode mode) {
  switch (mode) {
    case EvalMode::Scalar: return nll_scalar(model, ds);
    case EvalMode::BatchPrecise: return nll_batch(model, ds, MathPolicy::Precise);
    case EvalMode::BatchFast: return nll_batch(model, ds, MathPolicy::Fast);
  }
  throw Error(ErrorCode::Usage, "unknown evaluation mode");
}

void probabilities(Model& model, const DataSet& ds, EvalMode mode, std::span<double> out) {
  require_valid_params(model.pdf, model.graph);
  const std::span<const double> xs = ds.column(model.obs_name());
  if (xs.size() != out.size()) {
    throw Error(ErrorCode::Usage, "probabilities: length mismatch");
  }
  if (mode == EvalMode::Scalar) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      model.graph.set_observable_value(model.observable, xs[i]);
      out[i] = model.graph.evaluate_single(model.prob_node);
    }
    return;
  }
  const MathPolicy policy =
      mode == EvalMode::BatchFast ? MathPolicy::Fast : MathPolicy::Precise;
  const double norm = model.graph.evaluate_single(model.norm_node);
  model.pdf.eval_batch(xs, out, model.graph, policy);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] / norm;
}

}  // namespace ffit
