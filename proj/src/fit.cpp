#include "ffit/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace ffit {

double bound_transform(double u, double lower, double upper) {
  return lower + (upper - lower) * (std::sin(u) + 1.0) * 0.5;
}

double bound_transform_inverse(double p, double lower, double upper) {
  if (!(p > lower && p < upper)) {
    throw Error(ErrorCode::Numeric,
                "bound_transform_inverse: value " + std::to_string(p) +
                    " not strictly inside (" + std::to_string(lower) + ", " +
                    std::to_string(upper) + ")");
  }
  return std::asin(2.0 * (p - lower) / (upper - lower) - 1.0);
}

namespace {

constexpr double kHalfPi = 1.5707963267948966;

struct Objective {
  Model& model;
  const DataSet& ds;
  EvalMode mode;
  const std::vector<NodeId>& free_ids;
  std::uint64_t calls = 0;

  void apply(std::span<const double> u) {
    for (std::size_t i = 0; i < free_ids.size(); ++i) {
      const Node& n = model.graph.node(free_ids[i]);
      model.graph.set_value(free_ids[i], bound_transform(u[i], n.lower, n.upper));
    }
  }

  double operator()(std::span<const double> u) {
    apply(u);
    ++calls;
    return nll(model, ds, mode).value;
  }
};

// Inverts a symmetric matrix in place via Gauss-Jordan with partial
// pivoting. Returns false when (numerically) singular.
bool invert(std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (!(std::fabs(m[pivot][col]) > 0.0) || !std::isfinite(m[pivot][col])) return false;
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = m[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      m[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  m = std::move(inv);
  return true;
}

}  // namespace

FitResult fit_to(Model& model, const DataSet& ds, const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(options.tolerance > 0.0) || options.max_iterations <= 0) {
    throw Error(ErrorCode::Usage, "invalid fit options");
  }
  const std::vector<NodeId> free_ids = model.free_parameters();
  if (free_ids.empty()) {
    throw Error(ErrorCode::Usage, "fit requires at least one non-constant parameter");
  }
  // Invalid starting parameters fail before any NLL call.
  require_valid_params(model.pdf, model.graph);

  const std::size_t dim = free_ids.size();
  Objective f{model, ds, options.mode, free_ids};

  std::vector<double> u0(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const Node& n = model.graph.node(free_ids[i]);
    u0[i] = bound_transform_inverse(n.value, n.lower, n.upper);
  }

  const double f_start = f(u0);
  if (!std::isfinite(f_start)) {
    throw Error(ErrorCode::Numeric, "NLL is not finite at the starting parameters "
                                    "(zero-probability entry)");
  }

  // Deterministic initial simplex: each vertex offsets one coordinate by
  // 10% of the room left toward the nearer u-space bound.
  std::vector<std::vector<double>> simplex(dim + 1, u0);
  std::vector<double> fv(dim + 1);
  fv[0] = f_start;
  for (std::size_t i = 0; i < dim; ++i) {
    double step = 0.1 * (kHalfPi - u0[i]);
    if (step < 1e-3) step = -0.1 * (u0[i] + kHalfPi);
    simplex[i + 1][i] += step;
    fv[i + 1] = f(simplex[i + 1]);
  }

  FitResult result;
  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - 1];
    if (options.record_trace) result.trace.push_back(fv[best]);
    if (options.verbose && iter % 50 == 0) {
      std::fprintf(stderr, "iter %d  nll=%.10g\n", iter, fv[best]);
    }
    if (fv[worst] - fv[best] < options.tolerance) {
      converged = true;
      break;
    }

    for (std::size_t i = 0; i < dim; ++i) {
      double s = 0.0;
      for (std::size_t v = 0; v <= dim; ++v) {
        if (v != worst) s += simplex[v][i];
      }
      centroid[i] = s / static_cast<double>(dim);
    }

    for (std::size_t i = 0; i < dim; ++i) xr[i] = centroid[i] + (centroid[i] - simplex[worst][i]);
    const double fr = f(xr);
    if (fr < fv[best]) {
      for (std::size_t i = 0; i < dim; ++i) xe[i] = centroid[i] + 2.0 * (centroid[i] - simplex[worst][i]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      if (outside) {
        for (std::size_t i = 0; i < dim; ++i) xc[i] = centroid[i] + 0.5 * (xr[i] - centroid[i]);
      } else {
        for (std::size_t i = 0; i < dim; ++i) xc[i] = centroid[i] + 0.5 * (simplex[worst][i] - centroid[i]);
      }
      const double fc = f(xc);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t v = 0; v <= dim; ++v) {
          if (v == best) continue;
          for (std::size_t i = 0; i < dim; ++i) {
            simplex[v][i] = simplex[best][i] + 0.5 * (simplex[v][i] - simplex[best][i]);
          }
          fv[v] = f(simplex[v]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t v = 1; v <= dim; ++v) {
    if (fv[v] < fv[best]) best = v;
  }
  const std::vector<double> u_min = simplex[best];
  result.converged = converged;
  result.nll_min = fv[best];

  // Hessian in u-space by central differences.
  const double h = 1e-4;
  std::vector<std::vector<double>> hess(dim, std::vector<double>(dim, 0.0));
  const double f0 = f(u_min);
  std::vector<double> up(u_min);
  for (std::size_t i = 0; i < dim; ++i) {
    up = u_min;
    up[i] = u_min[i] + h;
    const double fp = f(up);
    up[i] = u_min[i] - h;
    const double fm = f(up);
    hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < dim; ++j) {
      up = u_min;
      up[i] += h;
      up[j] += h;
      const double fpp = f(up);
      up[j] -= 2.0 * h;
      const double fpm = f(up);
      up[i] -= 2.0 * h;
      const double fmm = f(up);
      up[j] += 2.0 * h;
      const double fmp = f(up);
      hess[i][j] = hess[j][i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  const bool invertible = invert(hess);

  // Leave the graph in the fitted state.
  f.apply(u_min);

  result.uncertainties_valid = invertible;
  for (std::size_t i = 0; i < dim; ++i) {
    const Node& n = model.graph.node(free_ids[i]);
    FittedParameter p;
    p.name = n.name;
    p.value = n.value;
    if (invertible && hess[i][i] > 0.0) {
      const double jac = 0.5 * (n.upper - n.lower) * std::fabs(std::cos(u_min[i]));
      p.uncertainty = std::sqrt(hess[i][i]) * jac;
    } else {
      p.uncertainty = 0.0;
      result.uncertainties_valid = false;
    }
    model.graph.set_error(free_ids[i], p.uncertainty);
    result.parameters.push_back(std::move(p));
  }
  result.n_nll_calls = f.calls;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace ffit
