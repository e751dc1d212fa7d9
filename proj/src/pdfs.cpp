#include "ffit/pdfs.hpp"

#include <cmath>

#include "ffit/eval.hpp"

namespace ffit {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024;

double pval(const Graph& g, NodeId id) { return g.node(id).value; }

template <class M>
struct GaussianKernel {
  double mu;
  double neg_inv_2s2;

  GaussianKernel(double mu_, double sigma) : mu(mu_), neg_inv_2s2(-1.0 / (2.0 * sigma * sigma)) {}

  double operator()(double x) const {
    const double d = x - mu;
    return M::exp(d * d * neg_inv_2s2);
  }
};

template <class M>
struct ExponentialKernel {
  double c;

  double operator()(double x) const { return M::exp(c * x); }
};

template <class M>
struct ChiSquareKernel {
  double half_k_m1;
  double at_zero;  // right-limit value at x == 0: 1 for k == 2, else 0

  explicit ChiSquareKernel(double k)
      : half_k_m1(0.5 * k - 1.0), at_zero(k == 2.0 ? 1.0 : 0.0) {}

  double operator()(double x) const {
    // x <= 0 handled by branchless select; the argument is sanitized so
    // log never sees a non-positive input.
    const double xa = x > 0.0 ? x : 1.0;
    const double v = M::exp(half_k_m1 * M::log(xa) - 0.5 * xa);
    const double pos = x > 0.0 ? 1.0 : 0.0;
    const double zero = x == 0.0 ? 1.0 : 0.0;
    return fastmath::select(pos, v, zero * at_zero);
  }
};

template <class M>
struct JohnsonKernel {
  double mu;
  double inv_lambda;
  double gamma;
  double delta;
  double coef;

  JohnsonKernel(double mu_, double lambda, double gamma_, double delta_)
      : mu(mu_),
        inv_lambda(1.0 / lambda),
        gamma(gamma_),
        delta(delta_),
        coef(delta_ / (lambda * kSqrt2Pi)) {}

  double operator()(double x) const {
    const double z = (x - mu) * inv_lambda;
    const double az = std::fabs(z);
    // asinh via its log form, symmetric to avoid cancellation for z < 0.
    const double as = std::copysign(M::log(az + std::sqrt(z * z + 1.0)), z);
    const double t = gamma + delta * as;
    return coef / std::sqrt(1.0 + z * z) * M::exp(-0.5 * t * t);
  }
};

template <class K>
void run_kernel(const K& k, std::span<const double> xs, std::span<double> out) {
  const double* __restrict src = xs.data();
  double* __restrict dst = out.data();
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] = k(src[i]);
}

template <template <class> class K, class... Args>
double eval_point(MathPolicy policy, double x, Args... args) {
  if (policy == MathPolicy::Fast) return K<fastmath::FastMath>(args...)(x);
  return K<fastmath::PreciseMath>(args...)(x);
}

template <template <class> class K, class... Args>
void eval_column(MathPolicy policy, std::span<const double> xs, std::span<double> out,
                 Args... args) {
  if (policy == MathPolicy::Fast) {
    run_kernel(K<fastmath::FastMath>(args...), xs, out);
  } else {
    run_kernel(K<fastmath::PreciseMath>(args...), xs, out);
  }
}

// f_1 .. f_{n-1} are free; the last coefficient is 1 - sum.
std::vector<double> mixture_fractions(const PdfSpec& spec, const Graph& g) {
  std::vector<double> f;
  double sum = 0.0;
  for (const NodeId id : spec.fractions) {
    f.push_back(pval(g, id));
    sum += f.back();
  }
  f.push_back(1.0 - sum);
  return f;
}

}  // namespace

std::string ParamCheck::describe() const {
  if (ok()) return "ok";
  std::string s;
  for (const auto& i : issues) {
    if (!s.empty()) s += "; ";
    s += i.param + ": " + i.reason;
  }
  return s;
}

void require_valid_params(const PdfSpec& spec, const Graph& g) {
  const ParamCheck c = spec.check_params(g);
  if (!c.ok()) {
    throw Error(ErrorCode::Numeric, "invalid parameters for '" + spec.name + "': " + c.describe());
  }
}

ParamCheck PdfSpec::check_params(const Graph& g) const {
  ParamCheck out;
  auto positive = [&](NodeId id, const char* what) {
    if (!(pval(g, id) > 0.0)) {
      out.issues.push_back({g.node(id).name, std::string(what) + " must be > 0"});
    }
  };
  switch (kind) {
    case PdfKind::Gaussian:
      positive(parameters[1], "sigma");
      break;
    case PdfKind::Exponential:
      break;
    case PdfKind::ChiSquare:
      positive(parameters[0], "k");
      break;
    case PdfKind::JohnsonSU:
      positive(parameters[1], "lambda");
      positive(parameters[3], "delta");
      break;
    case PdfKind::WeightedSum: {
      double sum = 0.0;
      for (const NodeId id : fractions) {
        const double f = pval(g, id);
        sum += f;
        if (!(f >= 0.0 && f <= 1.0)) {
          out.issues.push_back({g.node(id).name, "fraction must be in [0, 1]"});
        }
      }
      if (sum > 1.0) {
        out.issues.push_back({name, "fractions sum to more than 1"});
      }
      for (const PdfSpec& c : components) {
        const ParamCheck cc = c.check_params(g);
        out.issues.insert(out.issues.end(), cc.issues.begin(), cc.issues.end());
      }
      break;
    }
    case PdfKind::Expression:
      break;
  }
  return out;
}

double PdfSpec::eval_unnorm(double x, const Graph& g, MathPolicy policy) const {
  switch (kind) {
    case PdfKind::Gaussian:
      return eval_point<GaussianKernel>(policy, x, pval(g, parameters[0]), pval(g, parameters[1]));
    case PdfKind::Exponential:
      return eval_point<ExponentialKernel>(policy, x, pval(g, parameters[0]));
    case PdfKind::ChiSquare:
      return eval_point<ChiSquareKernel>(policy, x, pval(g, parameters[0]));
    case PdfKind::JohnsonSU:
      return eval_point<JohnsonKernel>(policy, x, pval(g, parameters[0]), pval(g, parameters[1]),
                                       pval(g, parameters[2]), pval(g, parameters[3]));
    case PdfKind::WeightedSum: {
      const std::vector<double> f = mixture_fractions(*this, g);
      const double lo = g.node(observable).lower;
      const double hi = g.node(observable).upper;
      double acc = 0.0;
      for (std::size_t i = 0; i < components.size(); ++i) {
        const double coef = f[i] / normalization(components[i], lo, hi, g);
        acc += coef * components[i].eval_unnorm(x, g, policy);
      }
      return acc;
    }
    case PdfKind::Expression: {
      std::vector<double> values(expr_var_nodes.size());
      for (std::size_t i = 0; i < expr_var_nodes.size(); ++i) {
        const Node& n = g.node(expr_var_nodes[i]);
        values[i] = n.kind == NodeKind::Observable ? x : n.value;
      }
      return program.eval(values, policy);
    }
  }
  return 0.0;
}

void PdfSpec::eval_batch(std::span<const double> xs, std::span<double> out, const Graph& g,
                         MathPolicy policy, std::uint64_t* kernel_calls) const {
  if (xs.size() != out.size()) {
    throw Error(ErrorCode::Usage, "eval_batch: length mismatch");
  }
  if (xs.empty()) return;
  require_valid_params(*this, g);
  if (kernel_calls) ++*kernel_calls;
  switch (kind) {
    case PdfKind::Gaussian:
      eval_column<GaussianKernel>(policy, xs, out, pval(g, parameters[0]), pval(g, parameters[1]));
      return;
    case PdfKind::Exponential:
      eval_column<ExponentialKernel>(policy, xs, out, pval(g, parameters[0]));
      return;
    case PdfKind::ChiSquare:
      eval_column<ChiSquareKernel>(policy, xs, out, pval(g, parameters[0]));
      return;
    case PdfKind::JohnsonSU:
      eval_column<JohnsonKernel>(policy, xs, out, pval(g, parameters[0]), pval(g, parameters[1]),
                                 pval(g, parameters[2]), pval(g, parameters[3]));
      return;
    case PdfKind::WeightedSum: {
      const std::vector<double> f = mixture_fractions(*this, g);
      const double lo = g.node(observable).lower;
      const double hi = g.node(observable).upper;
      for (double& v : out) v = 0.0;
      std::vector<double> tmp(xs.size());
      for (std::size_t c = 0; c < components.size(); ++c) {
        const PdfSpec& comp = components[c];
        const double coef = f[c] / normalization(comp, lo, hi, g);
        if (comp.kind == PdfKind::Expression) {
          // Legacy-style bridge: scalar computations per entry, written
          // into a contiguous array and passed on like any batch result.
          generic_batch_fallback(
              [&](double x) { return comp.eval_unnorm(x, g, policy); }, xs, tmp);
          if (kernel_calls) ++*kernel_calls;
        } else {
          comp.eval_batch(xs, tmp, g, policy, kernel_calls);
        }
        double* __restrict o = out.data();
        const double* __restrict t = tmp.data();
        for (std::size_t i = 0; i < xs.size(); ++i) o[i] += coef * t[i];
      }
      return;
    }
    case PdfKind::Expression: {
      std::vector<expr::Binding> bindings(expr_var_nodes.size());
      for (std::size_t i = 0; i < expr_var_nodes.size(); ++i) {
        const Node& n = g.node(expr_var_nodes[i]);
        bindings[i] = n.kind == NodeKind::Observable ? expr::Binding::from_column(xs)
                                                     : expr::Binding::broadcast(n.value);
      }
      program.eval_batch(bindings, out, policy);
      return;
    }
  }
}

std::optional<double> PdfSpec::analytic_integral(double lo, double hi, const Graph& g) const {
  if (!(lo < hi)) {
    throw Error(ErrorCode::Usage, "analytic_integral: invalid range");
  }
  switch (kind) {
    case PdfKind::Gaussian: {
      const double mu = pval(g, parameters[0]);
      const double sigma = pval(g, parameters[1]);
      const double inv = 1.0 / (sigma * std::sqrt(2.0));
      return sigma * std::sqrt(std::atan(1.0) * 2.0) *
             (std::erf((hi - mu) * inv) - std::erf((lo - mu) * inv));
    }
    case PdfKind::Exponential: {
      const double c = pval(g, parameters[0]);
      if (std::fabs(c) < 1e-12) return hi - lo;  // limit as c -> 0
      return (std::exp(c * hi) - std::exp(c * lo)) / c;
    }
    case PdfKind::WeightedSum: {
      const double full_lo = g.node(observable).lower;
      const double full_hi = g.node(observable).upper;
      const std::vector<double> f = mixture_fractions(*this, g);
      double acc = 0.0;
      for (std::size_t i = 0; i < components.size(); ++i) {
        const auto part = components[i].analytic_integral(lo, hi, g);
        if (!part) return std::nullopt;
        const auto norm = components[i].analytic_integral(full_lo, full_hi, g);
        acc += f[i] * *part / *norm;
      }
      return acc;
    }
    case PdfKind::ChiSquare:
    case PdfKind::JohnsonSU:
    case PdfKind::Expression:
      return std::nullopt;
  }
  return std::nullopt;
}

double PdfSpec::max_hint(double lo, double hi, const Graph& g) const {
  if (!(lo < hi)) {
    throw Error(ErrorCode::Usage, "max_hint: invalid range");
  }
  require_valid_params(*this, g);
  constexpr int kGrid = 1024;
  double best = 0.0;
  const double step = (hi - lo) / (kGrid - 1);
  for (int i = 0; i < kGrid; ++i) {
    const double x = i == kGrid - 1 ? hi : lo + i * step;
    const double v = eval_unnorm(x, g);
    if (v > best) best = v;
  }
  return best * 1.1;
}

std::vector<NodeId> PdfSpec::all_parameter_nodes() const {
  std::vector<NodeId> out;
  auto add_unique = [&](NodeId id) {
    for (const NodeId e : out) {
      if (e == id) return;
    }
    out.push_back(id);
  };
  if (kind == PdfKind::Expression) {
    for (const NodeId id : expr_var_nodes) {
      if (id != observable) add_unique(id);
    }
  } else {
    for (const NodeId id : parameters) add_unique(id);
  }
  for (const NodeId id : fractions) add_unique(id);
  for (const PdfSpec& c : components) {
    for (const NodeId id : c.all_parameter_nodes()) add_unique(id);
  }
  return out;
}

}  // namespace ffit
