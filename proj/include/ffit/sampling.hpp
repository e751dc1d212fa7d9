#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ffit/dataset.hpp"
#include "ffit/model.hpp"

namespace ffit {

// xoshiro256++ seeded through splitmix64. Fixed algorithm, so a given seed
// produces the identical stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; the pair's second value is cached.
  double gauss();

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct SampleStats {
  std::uint64_t proposed = 0;  // accept/reject proposals (0 if a direct sampler ran)
  std::uint64_t accepted = 0;

  double efficiency() const {
    return proposed == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

// Accept/reject against a constant envelope: propose uniform on [lo, hi],
// accept with probability pdf(x) / max_bound. Throws if the envelope is
// ever violated or the acceptance rate collapses.
std::vector<double> accept_reject(const std::function<double(double)>& pdf, double lo,
                                  double hi, std::size_t n, double max_bound, Rng& rng,
                                  SampleStats* stats = nullptr);

// n events from the model's normalized PDF over [lo, hi]. Direct samplers
// for Gaussian, Exponential, JohnsonSU and WeightedSum-of-such;
// accept/reject against max_hint otherwise.
DataSet sample(const PdfSpec& spec, double lo, double hi, std::size_t n,
               std::uint64_t seed, const Graph& g, const std::string& column_name,
               SampleStats* stats = nullptr);

DataSet sample(Model& model, std::size_t n, std::uint64_t seed,
               SampleStats* stats = nullptr);

}  // namespace ffit
