#include "ffit/sampling.hpp"

#include <cmath>

namespace ffit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97f4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gauss() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::atan(1.0) * 4.0 * u2;  // 2*pi*u2
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::vector<double> accept_reject(const std::function<double(double)>& pdf, double lo,
                                  double hi, std::size_t n, double max_bound, Rng& rng,
                                  SampleStats* stats) {
  if (!(max_bound > 0.0)) {
    throw Error(ErrorCode::Numeric, "accept/reject: envelope bound is not positive "
                                    "(degenerate PDF)");
  }
  std::vector<double> out;
  out.reserve(n);
  std::uint64_t proposed = 0;
  constexpr std::uint64_t kWarmup = 1000000;
  while (out.size() < n) {
    const double x = rng.uniform(lo, hi);
    const double p = pdf(x);
    ++proposed;
    if (p > max_bound) {
      throw Error(ErrorCode::Numeric, "accept/reject: pdf(" + std::to_string(x) + ") = " +
                                          std::to_string(p) + " exceeds envelope bound " +
                                          std::to_string(max_bound));
    }
    if (rng.uniform() * max_bound < p) out.push_back(x);
    if (proposed >= kWarmup &&
        static_cast<double>(out.size()) / static_cast<double>(proposed) < 1e-6) {
      throw Error(ErrorCode::Numeric, "accept/reject: acceptance rate below 1e-6, "
                                      "pathological envelope");
    }
  }
  if (stats) {
    stats->proposed += proposed;
    stats->accepted += n;
  }
  return out;
}

namespace {

double pval(const Graph& g, NodeId id) { return g.node(id).value; }

// Direct samplers produce one value inside [lo, hi]; out-of-range draws
// are rejected and redrawn.
double draw_gaussian(double mu, double sigma, double lo, double hi, Rng& rng) {
  while (true) {
    const double x = mu + sigma * rng.gauss();
    if (x >= lo && x <= hi) return x;
  }
}

// Inverse CDF of exp(c*x) truncated to [lo, hi], stable for small |c|.
double draw_exponential(double c, double lo, double hi, Rng& rng) {
  const double u = rng.uniform();
  if (std::fabs(c) < 1e-12) return lo + u * (hi - lo);
  return lo + std::log1p(u * std::expm1(c * (hi - lo))) / c;
}

double draw_johnson(double mu, double lambda, double gamma, double delta, double lo,
                    double hi, Rng& rng) {
  while (true) {
    const double z = rng.gauss();
    const double x = mu + lambda * std::sinh((z - gamma) / delta);
    if (x >= lo && x <= hi) return x;
  }
}

bool has_direct_sampler(const PdfSpec& spec) {
  switch (spec.kind) {
    case PdfKind::Gaussian:
    case PdfKind::Exponential:
    case PdfKind::JohnsonSU:
      return true;
    case PdfKind::WeightedSum:
      for (const PdfSpec& c : spec.components) {
        if (!has_direct_sampler(c)) return false;
      }
      return true;
    case PdfKind::ChiSquare:
    case PdfKind::Expression:
      return false;
  }
  return false;
}

double draw_direct(const PdfSpec& spec, double lo, double hi, const Graph& g, Rng& rng) {
  switch (spec.kind) {
    case PdfKind::Gaussian:
      return draw_gaussian(pval(g, spec.parameters[0]), pval(g, spec.parameters[1]), lo, hi, rng);
    case PdfKind::Exponential:
      return draw_exponential(pval(g, spec.parameters[0]), lo, hi, rng);
    case PdfKind::JohnsonSU:
      return draw_johnson(pval(g, spec.parameters[0]), pval(g, spec.parameters[1]),
                          pval(g, spec.parameters[2]), pval(g, spec.parameters[3]), lo, hi, rng);
    case PdfKind::WeightedSum: {
      // Pick a component by fraction, then run its sampler. Component
      // densities are range-truncated, so the fractions apply directly.
      double sum = 0.0;
      std::vector<double> cum;
      for (const NodeId id : spec.fractions) {
        sum += pval(g, id);
        cum.push_back(sum);
      }
      const double u = rng.uniform();
      std::size_t pick = spec.components.size() - 1;
      for (std::size_t i = 0; i < cum.size(); ++i) {
        if (u < cum[i]) {
          pick = i;
          break;
        }
      }
      return draw_direct(spec.components[pick], lo, hi, g, rng);
    }
    default:
      throw Error(ErrorCode::Usage, "no direct sampler for this pdf kind");
  }
}

}  // namespace

DataSet sample(const PdfSpec& spec, double lo, double hi, std::size_t n,
               std::uint64_t seed, const Graph& g, const std::string& column_name,
               SampleStats* stats) {
  require_valid_params(spec, g);
  Rng rng(seed);
  std::vector<double> values;
  if (has_direct_sampler(spec)) {
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) values.push_back(draw_direct(spec, lo, hi, g, rng));
    if (stats) stats->accepted += n;
  } else {
    const double bound = spec.max_hint(lo, hi, g);
    if (bound == 0.0) {
      throw Error(ErrorCode::Numeric, "cannot sample '" + spec.name +
                                          "': pdf is zero over the whole range");
    }
    values = accept_reject([&](double x) { return spec.eval_unnorm(x, g); }, lo, hi, n,
                           bound, rng, stats);
  }
  return DataSet({column_name}, {std::move(values)});
}

DataSet sample(Model& model, std::size_t n, std::uint64_t seed, SampleStats* stats) {
  return sample(model.pdf, model.obs_lower(), model.obs_upper(), n, seed, model.graph,
                model.obs_name(), stats);
}

}  // namespace ffit
