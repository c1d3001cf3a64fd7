#include "mird.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "mird/commands.hpp"

struct mird_config {
  mird::RunSettings s;
};

namespace {

thread_local std::string g_last_error;

mird_status fail(mird_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

mird_status usage(const std::string& msg) { return fail(MIRD_ERR_USAGE, msg); }

// Maps the C++ error taxonomy onto C status codes.
template <class Fn>
mird_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MIRD_OK;
  } catch (const mird::ConfigError& e) {
    return fail(MIRD_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(MIRD_ERR_RUNTIME, e.what());
  }
}

void fill_metrics(mird_metrics* out, const mird::MetricsReport& m) {
  if (!out) return;
  out->acc = m.acc;
  out->f1 = m.f1;
  out->mae = m.mae;
  out->corr = m.corr;
  out->accf1_defined = m.accf1_defined ? 1 : 0;
  out->corr_defined = m.corr_defined ? 1 : 0;
}

}  // namespace

extern "C" {

const char* mird_version(void) { return mird::kToolkitVersion; }

const char* mird_last_error(void) { return g_last_error.c_str(); }

mird_config* mird_config_new(void) { return new (std::nothrow) mird_config{}; }

mird_config* mird_config_load(const char* path) {
  if (!path) {
    usage("mird_config_load: path is null");
    return nullptr;
  }
  mird_config* cfg = nullptr;
  mird_status st = guarded([&] {
    auto owned = std::make_unique<mird_config>();
    owned->s = mird::parse_config_file(path);
    cfg = owned.release();
  });
  return st == MIRD_OK ? cfg : nullptr;
}

void mird_config_free(mird_config* cfg) { delete cfg; }

mird_status mird_config_set(mird_config* cfg, const char* key,
                            const char* value) {
  if (!cfg || !key || !value)
    return usage("mird_config_set: null argument");
  const char* dot = std::strchr(key, '.');
  if (!dot || dot == key || dot[1] == '\0')
    return usage(std::string("mird_config_set: key '") + key +
                 "' must look like section.name");
  std::string section(key, dot), name(dot + 1);
  return guarded([&] { mird::apply_config_key(cfg->s, section, name, value); });
}

mird_status mird_train(const mird_config* cfg, const char* out_dir, int force,
                       mird_metrics* out) {
  if (!cfg || !out_dir) return usage("mird_train: null argument");
  return guarded([&] {
    auto r = mird::run_train_command(cfg->s, out_dir, force != 0);
    fill_metrics(out, r.val_metrics);
  });
}

mird_status mird_eval(const char* checkpoint_path, const char* dataset_path,
                      mird_metrics* out) {
  if (!checkpoint_path || !dataset_path)
    return usage("mird_eval: null argument");
  return guarded([&] {
    fill_metrics(out, mird::run_eval_command(checkpoint_path, dataset_path));
  });
}

mird_status mird_ablate(const mird_config* cfg, const char* out_dir, int jobs,
                        char** table_out) {
  if (!cfg || !out_dir) return usage("mird_ablate: null argument");
  return guarded([&] {
    auto r = mird::run_ablate_command(cfg->s, out_dir, jobs);
    if (table_out) {
      char* buf = static_cast<char*>(std::malloc(r.table.size() + 1));
      if (!buf) throw std::bad_alloc();
      std::memcpy(buf, r.table.c_str(), r.table.size() + 1);
      *table_out = buf;
    }
  });
}

mird_status mird_mi_trace(const mird_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return usage("mird_mi_trace: null argument");
  return guarded([&] { mird::run_mi_trace_command(cfg->s, out_dir); });
}

void mird_string_free(char* s) { std::free(s); }

}  // extern "C"
