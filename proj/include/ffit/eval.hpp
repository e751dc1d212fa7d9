#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "ffit/dataset.hpp"
#include "ffit/pdfs.hpp"

namespace ffit {

enum class EvalMode { Scalar, BatchPrecise, BatchFast };

struct NllValue {
  double value = 0.0;
  std::size_t n_entries = 0;
  // Scalar mode: graph recomputations. Batch mode: kernel loop launches,
  // independent of n_entries.
  std::uint64_t n_evaluations = 0;
  std::ptrdiff_t first_invalid = -1;  // entry with p <= 0, if any
};

// Normalization integral of the unnormalized density over [lo, hi]:
// analytic where the PDF provides one, adaptive Simpson otherwise
// (abs tol 1e-10*(hi-lo), rel tol 1e-10, max depth 60).
double normalization(const PdfSpec& spec, double lo, double hi, const Graph& g);

double integrate_adaptive_simpson(const std::function<double(double)>& f, double lo,
                                  double hi, double abs_tol, double rel_tol,
                                  int max_depth);

// Bridge for PDFs without a batch kernel: per-entry scalar calls written
// into a contiguous output array.
void generic_batch_fallback(const std::function<double(double)>& scalar_pdf,
                            std::span<const double> xs, std::span<double> out);

class Model;

NllValue nll_scalar(Model& model, const DataSet& ds);
NllValue nll_batch(Model& model, const DataSet& ds, MathPolicy policy);
NllValue nll(Model& model, const DataSet& ds, EvalMode mode);

// Per-entry normalized probabilities in the given mode, for parity checks.
void probabilities(Model& model, const DataSet& ds, EvalMode mode, std::span<double> out);

}  // namespace ffit
