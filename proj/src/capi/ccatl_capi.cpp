#include "ccatl/ccatl.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "ccatl/cca.hpp"
#include "ccatl/config.hpp"
#include "ccatl/divergence.hpp"
#include "ccatl/error.hpp"
#include "ccatl/pipeline.hpp"
#include "ccatl/tabular.hpp"

struct ccatl_config {
  ccatl::ExperimentConfig cfg;
};

struct ccatl_dataset {
  ccatl::Dataset data;
  ccatl::CsvOptions csv;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_record;

ccatl_status fail(ccatl_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
ccatl_status guarded(F&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const ccatl::NumericalError& e) {
    return fail(CCATL_NUMERICAL_ERROR, e.what());
  } catch (const ccatl::Error& e) {
    return fail(CCATL_INPUT_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(CCATL_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(CCATL_INTERNAL_ERROR, "unknown failure");
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

ccatl_status to_status(ccatl::RunStatus s) {
  switch (s) {
    case ccatl::RunStatus::Ok: return CCATL_OK;
    case ccatl::RunStatus::Partial: return CCATL_PARTIAL;
    case ccatl::RunStatus::InputFailure: return CCATL_INPUT_ERROR;
    case ccatl::RunStatus::NumericalFailure: return CCATL_NUMERICAL_ERROR;
  }
  return CCATL_INTERNAL_ERROR;
}

ccatl::Matrix from_rows(const double* p, size_t n, size_t d) {
  if (!p && n * d > 0) throw ccatl::InputError("null data pointer");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      p, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
}

#define CCATL_REQUIRE(cond, msg) \
  if (!(cond)) return fail(CCATL_INPUT_ERROR, msg)

}  // namespace

extern "C" {

const char* ccatl_version(void) { return CCATL_VERSION; }
const char* ccatl_last_error(void) { return last_error.c_str(); }
const char* ccatl_last_error_record(void) { return last_record.c_str(); }
void ccatl_free_string(char* s) { std::free(s); }

ccatl_status ccatl_config_create(ccatl_config** out) {
  CCATL_REQUIRE(out, "null output pointer");
  return guarded([&] {
    *out = new ccatl_config();
    return CCATL_OK;
  });
}

void ccatl_config_destroy(ccatl_config* cfg) { delete cfg; }

size_t ccatl_config_key_count(void) { return ccatl::option_keys().size(); }

const char* ccatl_config_key(size_t i) {
  const auto& keys = ccatl::option_keys();
  return i < keys.size() ? keys[i].c_str() : nullptr;
}

ccatl_status ccatl_config_set(ccatl_config* cfg, const char* key, const char* value) {
  CCATL_REQUIRE(cfg && key && value, "null argument");
  return guarded([&] {
    ccatl::set_option(cfg->cfg, key, value);
    return CCATL_OK;
  });
}

ccatl_status ccatl_config_get(const ccatl_config* cfg, const char* key, char** out) {
  CCATL_REQUIRE(cfg && key && out, "null argument");
  return guarded([&] {
    *out = dup(ccatl::get_option(cfg->cfg, key));
    return CCATL_OK;
  });
}

ccatl_status ccatl_config_load_file(ccatl_config* cfg, const char* path) {
  CCATL_REQUIRE(cfg && path, "null argument");
  return guarded([&] {
    ccatl::load_config_file(cfg->cfg, path);
    return CCATL_OK;
  });
}

ccatl_status ccatl_config_apply_env(ccatl_config* cfg) {
  CCATL_REQUIRE(cfg, "null argument");
  return guarded([&] {
    ccatl::apply_process_env(cfg->cfg);
    return CCATL_OK;
  });
}

ccatl_status ccatl_config_manifest(const ccatl_config* cfg, char** out) {
  CCATL_REQUIRE(cfg && out, "null argument");
  return guarded([&] {
    *out = dup(ccatl::to_manifest(cfg->cfg));
    return CCATL_OK;
  });
}

ccatl_status ccatl_run(const ccatl_config* cfg) {
  CCATL_REQUIRE(cfg, "null argument");
  last_record.clear();
  return guarded([&] {
    const auto outcome = ccatl::run_experiment(cfg->cfg);
    if (outcome.error) {
      last_record = outcome.error->to_json();
      return fail(to_status(outcome.status), "[" + outcome.error->stage + "] " + outcome.error->message);
    }
    return CCATL_OK;
  });
}

ccatl_status ccatl_run_grid(const ccatl_config* base, const char* pairs_path) {
  CCATL_REQUIRE(base && pairs_path, "null argument");
  last_record.clear();
  return guarded([&] {
    const auto configs = ccatl::grid_from_pairs(base->cfg, pairs_path);
    const auto g = ccatl::run_grid(configs, base->cfg.out_dir, base->cfg.jobs);
    if (g.status != ccatl::RunStatus::Ok) {
      std::string msg;
      for (const auto& run : g.runs)
        if (run.error) msg += (msg.empty() ? "" : "; ") + run.transfer_id + ": " + run.error->message;
      return fail(to_status(g.status), msg);
    }
    return CCATL_OK;
  });
}

ccatl_status ccatl_synth(const ccatl_config* cfg) {
  CCATL_REQUIRE(cfg, "null argument");
  return guarded([&] {
    ccatl::write_synth(cfg->cfg.synth, cfg->cfg.csv, cfg->cfg.out_dir);
    return CCATL_OK;
  });
}

ccatl_status ccatl_report(const char* dir, char** out) {
  CCATL_REQUIRE(dir && out, "null argument");
  return guarded([&] {
    *out = dup(ccatl::render_report(std::string(dir)));
    return CCATL_OK;
  });
}

ccatl_status ccatl_dataset_load(const char* path, const char* label_column, const char* na_token,
                                ccatl_dataset** out) {
  CCATL_REQUIRE(path && out, "null argument");
  return guarded([&] {
    auto d = std::make_unique<ccatl_dataset>();
    if (label_column) d->csv.label_column = label_column;
    if (na_token) d->csv.na_token = na_token;
    d->data = ccatl::load_csv(path, d->csv);
    *out = d.release();
    return CCATL_OK;
  });
}

ccatl_status ccatl_dataset_save(const ccatl_dataset* d, const char* path) {
  CCATL_REQUIRE(d && path, "null argument");
  return guarded([&] {
    ccatl::save_csv(path, d->data, d->csv);
    return CCATL_OK;
  });
}

void ccatl_dataset_destroy(ccatl_dataset* d) { delete d; }

size_t ccatl_dataset_rows(const ccatl_dataset* d) { return d ? static_cast<size_t>(d->data.rows()) : 0; }
size_t ccatl_dataset_cols(const ccatl_dataset* d) { return d ? static_cast<size_t>(d->data.cols()) : 0; }

ccatl_status ccatl_dataset_cell(const ccatl_dataset* d, size_t row, size_t col, double* value, int* missing) {
  CCATL_REQUIRE(d && value && missing, "null argument");
  CCATL_REQUIRE(row < ccatl_dataset_rows(d) && col < ccatl_dataset_cols(d), "cell index out of range");
  const auto i = static_cast<Eigen::Index>(row);
  const auto j = static_cast<Eigen::Index>(col);
  *value = d->data.values(i, j);
  *missing = d->data.missing(i, j) ? 1 : 0;
  return CCATL_OK;
}

ccatl_status ccatl_dataset_label(const ccatl_dataset* d, size_t row, int* label) {
  CCATL_REQUIRE(d && label, "null argument");
  CCATL_REQUIRE(row < ccatl_dataset_rows(d), "row index out of range");
  *label = d->data.labels(static_cast<Eigen::Index>(row));
  return CCATL_OK;
}

ccatl_status ccatl_mmd(const double* x, size_t nx, const double* y, size_t ny, size_t d, double gamma, double* out) {
  CCATL_REQUIRE(out, "null argument");
  return guarded([&] {
    const auto k = gamma > 0.0 ? ccatl::KernelSpec::rbf(gamma) : ccatl::KernelSpec::linear();
    *out = ccatl::mmd(from_rows(x, nx, d), from_rows(y, ny, d), k);
    return CCATL_OK;
  });
}

ccatl_status ccatl_coral(const double* x, size_t nx, const double* y, size_t ny, size_t d, double* out) {
  CCATL_REQUIRE(out, "null argument");
  return guarded([&] {
    *out = ccatl::coral_loss(from_rows(x, nx, d), from_rows(y, ny, d));
    return CCATL_OK;
  });
}

ccatl_status ccatl_cca_correlations(const double* x, const double* y, size_t n, size_t p, size_t q, size_t r,
                                    double rho, double* out) {
  CCATL_REQUIRE(out, "null argument");
  return guarded([&] {
    const auto m = ccatl::fit_linear_cca(from_rows(x, n, p), from_rows(y, n, q), static_cast<ccatl::Index>(r), rho);
    for (size_t i = 0; i < r; ++i) out[i] = m.correlations(static_cast<Eigen::Index>(i));
    return CCATL_OK;
  });
}

}  // extern "C"
