#include "ffit/fastmath.hpp"

namespace ffit::fastmath {

namespace {

void check_lengths(std::span<const double> in, std::span<double> out) {
  if (in.size() != out.size()) {
    throw Error(ErrorCode::Usage, "batch length mismatch: in=" +
                                      std::to_string(in.size()) +
                                      " out=" + std::to_string(out.size()));
  }
}

}  // namespace

void fast_exp_batch(std::span<const double> in, std::span<double> out) {
  check_lengths(in, out);
  const double* __restrict src = in.data();
  double* __restrict dst = out.data();
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] = fast_exp(src[i]);
}

void fast_log_batch(std::span<const double> in, std::span<double> out) {
  check_lengths(in, out);
  const double* __restrict src = in.data();
  double* __restrict dst = out.data();
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] = fast_log(src[i]);
}

}  // namespace ffit::fastmath
