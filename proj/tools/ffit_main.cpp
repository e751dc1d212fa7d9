// Command-line driver for the ffit engine. Talks to the engine purely
// through the C API in ffit.h.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffit.h"

namespace {

struct ModelHandle {
  ffit_model* m = nullptr;
  ~ModelHandle() { ffit_model_free(m); }
};

struct DatasetHandle {
  ffit_dataset* ds = nullptr;
  ~DatasetHandle() { ffit_dataset_free(ds); }
};

struct ResultHandle {
  ffit_fit_result* r = nullptr;
  ~ResultHandle() { ffit_result_free(r); }
};

[[noreturn]] void fail(int status) {
  std::fprintf(stderr, "error: %s\n", ffit_last_error());
  std::exit(status == FFIT_OK ? 3 : status);
}

void check(int status) {
  if (status != FFIT_OK) fail(status);
}

ffit_mode parse_batch_mode(const std::string& s) {
  if (s == "off") return FFIT_MODE_SCALAR;
  if (s == "precise") return FFIT_MODE_BATCH_PRECISE;
  if (s == "fast") return FFIT_MODE_BATCH_FAST;
  std::fprintf(stderr, "error: unknown batch mode '%s' (use off|precise|fast)\n", s.c_str());
  std::exit(1);
}

const char* mode_name(ffit_mode m) {
  switch (m) {
    case FFIT_MODE_SCALAR: return "scalar";
    case FFIT_MODE_BATCH_PRECISE: return "batch-precise";
    case FFIT_MODE_BATCH_FAST: return "batch-fast";
  }
  return "?";
}

double time_nll(ffit_model* m, ffit_dataset* ds, ffit_mode mode, int repeat,
                double* nll_out) {
  std::vector<double> times;
  times.reserve(repeat);
  double value = 0.0;
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    check(ffit_nll(m, ds, mode, &value, nullptr));
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  if (nll_out) *nll_out = value;
  return times[times.size() / 2];
}

struct Deviations {
  double max_prob = 0.0;
  long worst_entry = -1;
  double nll = 0.0;
};

Deviations compare_modes(ffit_model* m, ffit_dataset* ds, ffit_mode ref, ffit_mode other) {
  const long n = ffit_dataset_rows(ds);
  std::vector<double> pa(n), pb(n);
  check(ffit_probabilities(m, ds, ref, pa.data()));
  check(ffit_probabilities(m, ds, other, pb.data()));
  Deviations d;
  for (long i = 0; i < n; ++i) {
    const double rel = std::fabs(pb[i] - pa[i]) / std::fabs(pa[i]);
    if (rel > d.max_prob) {
      d.max_prob = rel;
      d.worst_entry = i;
    }
  }
  double na = 0.0, nb = 0.0;
  check(ffit_nll(m, ds, ref, &na, nullptr));
  check(ffit_nll(m, ds, other, &nb, nullptr));
  d.nll = std::fabs(nb - na) / std::fabs(na);
  return d;
}

int cmd_generate(const std::string& model_file, long n, unsigned long long seed,
                 const std::string& out_csv) {
  ModelHandle model;
  check(ffit_model_load(model_file.c_str(), &model.m));
  DatasetHandle ds;
  double efficiency = -1.0;
  check(ffit_sample(model.m, n, seed, &ds.ds, &efficiency));
  check(ffit_dataset_write_csv(ds.ds, out_csv.c_str()));
  std::printf("wrote %ld events to %s\n", ffit_dataset_rows(ds.ds), out_csv.c_str());
  if (efficiency >= 0.0) {
    std::printf("accept/reject efficiency: %.4f\n", efficiency);
  }
  return 0;
}

int cmd_fit(const std::string& model_file, const std::string& data_csv,
            const std::string& batch_mode, const std::string& report_path) {
  const ffit_mode mode = parse_batch_mode(batch_mode);
  ModelHandle model;
  check(ffit_model_load(model_file.c_str(), &model.m));
  DatasetHandle ds;
  long dropped = 0;
  check(ffit_dataset_read_csv(model.m, data_csv.c_str(), &ds.ds, &dropped));
  if (dropped > 0) {
    std::printf("dropped %ld out-of-range rows\n", dropped);
  }
  ResultHandle res;
  check(ffit_fit(model.m, ds.ds, mode, 0.0, 0, &res.r));

  const int np = ffit_result_param_count(res.r);
  std::printf("%-16s %16s %16s\n", "parameter", "value", "uncertainty");
  for (int i = 0; i < np; ++i) {
    std::printf("%-16s %16.8g %16.8g\n", ffit_result_param_name(res.r, i),
                ffit_result_param_value(res.r, i), ffit_result_param_uncertainty(res.r, i));
  }
  std::printf("converged:  %s\n", ffit_result_converged(res.r) ? "yes" : "no");
  std::printf("nll:        %.10g\n", ffit_result_nll(res.r));
  std::printf("nll calls:  %llu\n", ffit_result_nll_calls(res.r));
  std::printf("wall time:  %.3f s\n", ffit_result_wall_seconds(res.r));
  if (!ffit_result_uncertainties_valid(res.r)) {
    std::printf("warning: Hessian not invertible, uncertainties invalid\n");
  }

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::fprintf(stderr, "error: cannot write report: %s\n", report_path.c_str());
      return 2;
    }
    out << "quantity,value,uncertainty\n";
    for (int i = 0; i < np; ++i) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", ffit_result_param_name(res.r, i),
                    ffit_result_param_value(res.r, i),
                    ffit_result_param_uncertainty(res.r, i));
      out << buf;
    }
    out << "nll," << ffit_result_nll(res.r) << ",0\n";
    out << "converged," << ffit_result_converged(res.r) << ",0\n";
    out << "nll_calls," << ffit_result_nll_calls(res.r) << ",0\n";
  }
  if (!ffit_result_converged(res.r)) {
    std::fprintf(stderr, "error: fit did not converge\n");
    return 3;
  }
  return 0;
}

int cmd_bench(const std::string& model_file, long n, int repeat, unsigned long long seed,
              const std::string& out_csv) {
  ModelHandle model;
  check(ffit_model_load(model_file.c_str(), &model.m));
  DatasetHandle ds;
  double efficiency = -1.0;
  check(ffit_sample(model.m, n, seed, &ds.ds, &efficiency));

  const ffit_mode modes[] = {FFIT_MODE_SCALAR, FFIT_MODE_BATCH_PRECISE, FFIT_MODE_BATCH_FAST};
  double times[3], nlls[3];
  for (int i = 0; i < 3; ++i) {
    times[i] = time_nll(model.m, ds.ds, modes[i], repeat, &nlls[i]);
  }

  std::printf("%-14s %10s %14s %14s %10s\n", "mode", "events", "median[s]", "nll", "speedup");
  for (int i = 0; i < 3; ++i) {
    std::printf("%-14s %10ld %14.6f %14.6f %10.2f\n", mode_name(modes[i]), n, times[i],
                nlls[i], times[0] / times[i]);
  }
  const Deviations dp = compare_modes(model.m, ds.ds, FFIT_MODE_SCALAR, FFIT_MODE_BATCH_PRECISE);
  const Deviations df = compare_modes(model.m, ds.ds, FFIT_MODE_SCALAR, FFIT_MODE_BATCH_FAST);
  std::printf("max probability deviation: precise=%.3g fast=%.3g\n", dp.max_prob, df.max_prob);
  std::printf("nll deviation:             precise=%.3g fast=%.3g\n", dp.nll, df.nll);

  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) {
      std::fprintf(stderr, "error: cannot write report: %s\n", out_csv.c_str());
      return 2;
    }
    out << "model,n_events,mode,wall_time,nll_value,speedup\n";
    for (int i = 0; i < 3; ++i) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%ld,%s,%.17g,%.17g,%.17g\n", model_file.c_str(), n,
                    mode_name(modes[i]), times[i], nlls[i], times[0] / times[i]);
      out << buf;
    }
  }
  return 0;
}

int cmd_parity(const std::string& model_file, long n, unsigned long long seed) {
  ModelHandle model;
  check(ffit_model_load(model_file.c_str(), &model.m));
  DatasetHandle ds;
  check(ffit_sample(model.m, n, seed, &ds.ds, nullptr));

  const Deviations dp = compare_modes(model.m, ds.ds, FFIT_MODE_SCALAR, FFIT_MODE_BATCH_PRECISE);
  const Deviations df = compare_modes(model.m, ds.ds, FFIT_MODE_SCALAR, FFIT_MODE_BATCH_FAST);

  std::printf("precise: max probability deviation %.3g, nll deviation %.3g\n", dp.max_prob,
              dp.nll);
  std::printf("fast:    max probability deviation %.3g, nll deviation %.3g\n", df.max_prob,
              df.nll);

  bool ok = true;
  if (dp.max_prob != 0.0 || dp.nll != 0.0) {
    std::fprintf(stderr, "error: precise mode deviates from scalar (must be bitwise)");
    if (dp.worst_entry >= 0) std::fprintf(stderr, ", worst entry %ld", dp.worst_entry);
    std::fprintf(stderr, "\n");
    ok = false;
  }
  if (df.max_prob > 1e-14) {
    std::fprintf(stderr, "error: fast-mode probability deviation %.3g > 1e-14 at entry %ld\n",
                 df.max_prob, df.worst_entry);
    ok = false;
  }
  if (df.nll > 2e-14) {
    std::fprintf(stderr, "error: fast-mode nll deviation %.3g > 2e-14\n", df.nll);
    ok = false;
  }
  if (ok) std::printf("PASS\n");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unbinned maximum-likelihood fitting with scalar and batch likelihood modes"};
  app.require_subcommand(1);

  std::string model_file, data_csv, out_path, batch_mode = "off";
  long events = 10000;
  int repeat = 7;
  unsigned long long seed = 1;

  auto* gen = app.add_subcommand("generate", "sample toy data from a model PDF");
  gen->add_option("model", model_file, "model file")->required();
  gen->add_option("-n,--events", events, "number of events")->required();
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("-o,--out", out_path, "output CSV path")->required();

  auto* fit = app.add_subcommand("fit", "fit a model to a CSV dataset");
  fit->add_option("model", model_file, "model file")->required();
  fit->add_option("data", data_csv, "dataset CSV")->required();
  fit->add_option("--batch-mode", batch_mode, "off|precise|fast");
  fit->add_option("--out", out_path, "machine-readable report CSV");

  auto* bench = app.add_subcommand("bench", "time NLL evaluation in all modes");
  bench->add_option("model", model_file, "model file")->required();
  bench->add_option("--events", events, "number of events");
  bench->add_option("--repeat", repeat, "repetitions per mode (median reported)");
  bench->add_option("--seed", seed, "random seed");
  bench->add_option("--out", out_path, "benchmark report CSV");

  auto* parity = app.add_subcommand("parity", "check scalar/batch agreement");
  parity->add_option("model", model_file, "model file")->required();
  parity->add_option("--events", events, "number of events");
  parity->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (gen->parsed()) return cmd_generate(model_file, events, seed, out_path);
  if (fit->parsed()) return cmd_fit(model_file, data_csv, batch_mode, out_path);
  if (bench->parsed()) return cmd_bench(model_file, events, repeat, seed, out_path);
  if (parity->parsed()) return cmd_parity(model_file, events, seed);
  return 1;
}
