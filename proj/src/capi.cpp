#include "ffit.h"

#include <cstring>
#include <memory>
#include <string>

#include "ffit/eval.hpp"
#include "ffit/fit.hpp"
#include "ffit/model.hpp"
#include "ffit/sampling.hpp"

using ffit::EvalMode;

struct ffit_model {
  std::unique_ptr<ffit::Model> impl;
};

struct ffit_dataset {
  ffit::DataSet data;
};

struct ffit_fit_result {
  ffit::FitResult result;
};

namespace {

thread_local std::string g_last_error;

int set_error(const ffit::Error& e) {
  g_last_error = e.what();
  return static_cast<int>(e.code());
}

int set_error(const std::exception& e) {
  g_last_error = e.what();
  return FFIT_ERR_NUMERIC;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    return FFIT_OK;
  } catch (const ffit::Error& e) {
    return set_error(e);
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

void require(const void* p, const char* what) {
  if (!p) {
    throw ffit::Error(ffit::ErrorCode::Usage, std::string(what) + " must not be null");
  }
}

EvalMode to_mode(ffit_mode m) {
  switch (m) {
    case FFIT_MODE_SCALAR: return EvalMode::Scalar;
    case FFIT_MODE_BATCH_PRECISE: return EvalMode::BatchPrecise;
    case FFIT_MODE_BATCH_FAST: return EvalMode::BatchFast;
  }
  throw ffit::Error(ffit::ErrorCode::Usage, "unknown evaluation mode");
}

std::vector<ffit::NodeId> parameter_ids(const ffit::Model& m) {
  std::vector<ffit::NodeId> out;
  for (ffit::NodeId id = 0; id < m.graph.size(); ++id) {
    if (m.graph.node(id).kind == ffit::NodeKind::Parameter) out.push_back(id);
  }
  return out;
}

const ffit::Node* find_param(const ffit::Model& m, const char* name) {
  if (!name || !m.graph.has(name)) return nullptr;
  const ffit::Node& n = m.graph.node(m.graph.id_of(name));
  return n.kind == ffit::NodeKind::Parameter ? &n : nullptr;
}

}  // namespace

extern "C" {

const char* ffit_last_error(void) { return g_last_error.c_str(); }

int ffit_model_load(const char* path, ffit_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<ffit_model>();
    m->impl = ffit::Model::from_file(path);
    *out = m.release();
  });
}

int ffit_model_parse(const char* text, ffit_model** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    auto m = std::make_unique<ffit_model>();
    m->impl = ffit::Model::from_string(text);
    *out = m.release();
  });
}

void ffit_model_free(ffit_model* m) { delete m; }

const char* ffit_model_observable(const ffit_model* m) {
  return m->impl->obs_name().c_str();
}

int ffit_model_observable_range(const ffit_model* m, double* lo, double* hi) {
  return guarded([&] {
    require(m, "model");
    if (lo) *lo = m->impl->obs_lower();
    if (hi) *hi = m->impl->obs_upper();
  });
}

int ffit_model_param_count(const ffit_model* m) {
  return static_cast<int>(parameter_ids(*m->impl).size());
}

const char* ffit_model_param_name(const ffit_model* m, int i) {
  const auto ids = parameter_ids(*m->impl);
  if (i < 0 || static_cast<std::size_t>(i) >= ids.size()) return nullptr;
  return m->impl->graph.node(ids[i]).name.c_str();
}

int ffit_model_param_is_constant(const ffit_model* m, const char* name, int* constant) {
  return guarded([&] {
    require(m, "model");
    require(constant, "constant");
    const ffit::Node* n = find_param(*m->impl, name);
    if (!n) {
      throw ffit::Error(ffit::ErrorCode::Usage,
                        "unknown parameter: " + std::string(name ? name : "(null)"));
    }
    *constant = n->constant ? 1 : 0;
  });
}

int ffit_model_get_param(const ffit_model* m, const char* name, double* value,
                         double* uncertainty) {
  return guarded([&] {
    require(m, "model");
    const ffit::Node* n = find_param(*m->impl, name);
    if (!n) {
      throw ffit::Error(ffit::ErrorCode::Usage,
                        "unknown parameter: " + std::string(name ? name : "(null)"));
    }
    if (value) *value = n->value;
    if (uncertainty) *uncertainty = n->error;
  });
}

int ffit_model_set_param(ffit_model* m, const char* name, double value) {
  return guarded([&] {
    require(m, "model");
    if (!name || !m->impl->graph.has(name)) {
      throw ffit::Error(ffit::ErrorCode::Usage,
                        "unknown parameter: " + std::string(name ? name : "(null)"));
    }
    m->impl->graph.set_value(m->impl->graph.id_of(name), value);
  });
}

int ffit_dataset_read_csv(const ffit_model* m, const char* path, ffit_dataset** out,
                          long* dropped) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    require(out, "out");
    const ffit::ObservableSpec schema[] = {m->impl->obs_spec()};
    auto loaded = ffit::DataSet::from_csv(path, schema);
    if (dropped) *dropped = static_cast<long>(loaded.dropped);
    *out = new ffit_dataset{std::move(loaded.data)};
  });
}

int ffit_dataset_write_csv(const ffit_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path"); ds->data.write_csv(path); });
}

long ffit_dataset_rows(const ffit_dataset* ds) {
  return static_cast<long>(ds->data.n_rows());
}

void ffit_dataset_free(ffit_dataset* ds) { delete ds; }

int ffit_sample(ffit_model* m, long n, unsigned long long seed, ffit_dataset** out,
                double* efficiency) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    if (n < 0) {
      throw ffit::Error(ffit::ErrorCode::Usage, "sample size must be >= 0");
    }
    ffit::SampleStats stats;
    auto ds = ffit::sample(*m->impl, static_cast<std::size_t>(n), seed, &stats);
    if (efficiency) *efficiency = stats.proposed == 0 ? -1.0 : stats.efficiency();
    *out = new ffit_dataset{std::move(ds)};
  });
}

int ffit_nll(ffit_model* m, const ffit_dataset* ds, ffit_mode mode, double* value,
             unsigned long long* n_evaluations) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    const ffit::NllValue v = ffit::nll(*m->impl, ds->data, to_mode(mode));
    if (value) *value = v.value;
    if (n_evaluations) *n_evaluations = v.n_evaluations;
  });
}

int ffit_probabilities(ffit_model* m, const ffit_dataset* ds, ffit_mode mode,
                       double* out) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    require(out, "out");
    ffit::probabilities(*m->impl, ds->data, to_mode(mode),
                        std::span<double>(out, ds->data.n_rows()));
  });
}

int ffit_fit(ffit_model* m, const ffit_dataset* ds, ffit_mode mode, double tolerance,
             long max_iterations, ffit_fit_result** out) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    require(out, "out");
    ffit::FitOptions opt;
    opt.mode = to_mode(mode);
    if (tolerance > 0.0) opt.tolerance = tolerance;
    if (max_iterations > 0) opt.max_iterations = static_cast<int>(max_iterations);
    auto r = std::make_unique<ffit_fit_result>();
    r->result = ffit::fit_to(*m->impl, ds->data, opt);
    *out = r.release();
  });
}

int ffit_result_converged(const ffit_fit_result* r) { return r->result.converged ? 1 : 0; }

double ffit_result_nll(const ffit_fit_result* r) { return r->result.nll_min; }

unsigned long long ffit_result_nll_calls(const ffit_fit_result* r) {
  return r->result.n_nll_calls;
}

double ffit_result_wall_seconds(const ffit_fit_result* r) { return r->result.wall_seconds; }

int ffit_result_uncertainties_valid(const ffit_fit_result* r) {
  return r->result.uncertainties_valid ? 1 : 0;
}

int ffit_result_param_count(const ffit_fit_result* r) {
  return static_cast<int>(r->result.parameters.size());
}

const char* ffit_result_param_name(const ffit_fit_result* r, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= r->result.parameters.size()) return nullptr;
  return r->result.parameters[i].name.c_str();
}

double ffit_result_param_value(const ffit_fit_result* r, int i) {
  return r->result.parameters[i].value;
}

double ffit_result_param_uncertainty(const ffit_fit_result* r, int i) {
  return r->result.parameters[i].uncertainty;
}

void ffit_result_free(ffit_fit_result* r) { delete r; }

}  // extern "C"
