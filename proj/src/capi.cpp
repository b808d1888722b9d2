#include "kppspread.h"

#include <cmath>
#include <cstring>
#include <string>

#include <json.hpp>

#include "kpp/errors.hpp"
#include "kpp/media.hpp"
#include "kpp/pde.hpp"
#include "kpp/runner.hpp"
#include "kpp/speed.hpp"

using nlohmann::json;

extern "C" struct kpp_medium {
  kpp::media::Medium m;
};

namespace {

thread_local std::string g_last_error;

kpp_status map_code(kpp::errc c) {
  switch (c) {
    case kpp::errc::invalid_argument: return KPP_ERR_INVALID_ARGUMENT;
    case kpp::errc::hypothesis_violation: return KPP_ERR_HYPOTHESIS;
    case kpp::errc::numerical_failure: return KPP_ERR_NUMERICAL;
    case kpp::errc::config_error: return KPP_ERR_CONFIG;
    case kpp::errc::io_error: return KPP_ERR_IO;
  }
  return KPP_ERR_INTERNAL;
}

template <typename F>
kpp_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const kpp::error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KPP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return KPP_ERR_INTERNAL;
  }
}

kpp_status arg_error(const std::string& msg) {
  g_last_error = msg;
  return KPP_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json_text(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    kpp::fail(kpp::errc::config_error, std::string(what) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* kpp_version(void) { return kpp::runner::tool_version; }

const char* kpp_last_error(void) { return g_last_error.c_str(); }

kpp_status kpp_medium_create_preset(const char* preset, kpp_medium** out) {
  if (!preset || !out) return arg_error("null argument");
  *out = nullptr;
  return guarded([&] {
    kpp::require(kpp::runner::is_preset(preset), kpp::errc::config_error,
                 std::string("unknown preset '") + preset + "'");
    const auto cfg = kpp::runner::preset_config(preset);
    *out = new kpp_medium{kpp::runner::build_medium(cfg)};
    return KPP_OK;
  });
}

kpp_status kpp_medium_create_json(const char* medium_json, kpp_medium** out) {
  if (!medium_json || !out) return arg_error("null argument");
  *out = nullptr;
  return guarded([&] {
    kpp::runner::RunConfig cfg;
    cfg.medium = parse_json_text(medium_json, "medium");
    *out = new kpp_medium{kpp::runner::build_medium(cfg)};
    return KPP_OK;
  });
}

void kpp_medium_free(kpp_medium* m) { delete m; }

kpp_status kpp_medium_eval(const kpp_medium* m, double x, double* a, double* q, double* c) {
  if (!m) return arg_error("null medium");
  return guarded([&] {
    if (a) *a = m->m.a(x);
    if (q) *q = m->m.q(x);
    if (c) *c = m->m.c()(x);
    return KPP_OK;
  });
}

kpp_status kpp_medium_reaction(const kpp_medium* m, double x, double u, double* f) {
  if (!m || !f) return arg_error("null argument");
  return guarded([&] {
    *f = m->m.f.eval(x, u);
    return KPP_OK;
  });
}

kpp_status kpp_medium_validate(const kpp_medium* m, double x_lo, double x_hi, int samples,
                               int* pass) {
  if (!m || !pass) return arg_error("null argument");
  return guarded([&] {
    kpp::require(x_hi > x_lo && samples >= 2, kpp::errc::invalid_argument,
                 "validation window needs x_lo < x_hi and samples >= 2");
    const double radius = m->m.c().support_radius().value_or(0.0);
    *pass = kpp::media::validate(m->m, x_lo, x_hi, samples, radius).all_pass() ? 1 : 0;
    return KPP_OK;
  });
}

kpp_status kpp_hamiltonian(const kpp_medium* m, double p, double* H_under, double* H_over) {
  if (!m || !H_under || !H_over) return arg_error("null argument");
  return guarded([&] {
    const auto e = kpp::speed::default_engine(m->m);
    const auto [lo, hi] = kpp::speed::hamiltonian_at(m->m, p, e, {});
    *H_under = lo;
    *H_over = hi;
    return KPP_OK;
  });
}

kpp_status kpp_theoretical_speeds(const kpp_medium* m, double* w_under, double* w_over,
                                  double* p_star_under, double* p_star_over) {
  if (!m || !w_under || !w_over) return arg_error("null argument");
  return guarded([&] {
    const auto th = kpp::speed::theoretical_speeds(m->m, {});
    *w_under = th.speeds.under.w;
    *w_over = th.speeds.over.w;
    if (p_star_under) *p_star_under = th.speeds.under.p_star;
    if (p_star_over) *p_star_over = th.speeds.over.p_star;
    return KPP_OK;
  });
}

kpp_status kpp_empirical_speeds(const kpp_medium* m, double t_final, double dx, double dt,
                                double delta, double* w_star, double* w_upper) {
  if (!m || !w_star || !w_upper) return arg_error("null argument");
  return guarded([&] {
    kpp::require(t_final > 0 && dx > 0 && dt > 0, kpp::errc::invalid_argument,
                 "t_final, dx and dt must be positive");
    kpp::pde::SolverConfig scfg;
    scfg.dt = dt;
    scfg.snapshot_times = {0.0, t_final / 2, 3 * t_final / 4, t_final};
    const auto traj = kpp::pde::simulate(m->m, {}, t_final, dx, scfg);
    const auto& last = traj.snapshots.back();
    std::vector<double> w_grid;
    for (double w = 0.005; w <= last.grid.x_right() / last.t; w += 0.005) w_grid.push_back(w);
    const auto est = kpp::speed::empirical_speeds(traj, w_grid, delta);
    *w_star = est.w_star_emp.value_or(std::nan(""));
    *w_upper = est.w_upper_emp.value_or(std::nan(""));
    return KPP_OK;
  });
}

kpp_status kpp_run_config(const char* config_json, int quiet, int* exit_code) {
  if (!config_json || !exit_code) return arg_error("null argument");
  *exit_code = 3;
  return guarded([&] {
    json doc;
    try {
      doc = parse_json_text(config_json, "config");
      const auto cfg = kpp::runner::parse_config(doc);
      *exit_code = kpp::runner::run(cfg, doc, quiet != 0);
    } catch (const kpp::error& e) {
      g_last_error = e.what();
      *exit_code = e.code() == kpp::errc::config_error ? 2 : 3;
    }
    return KPP_OK;
  });
}

kpp_status kpp_sweep_config(const char* config_json, const char* param,
                            const char* values_json, int workers, int quiet,
                            int* exit_code) {
  if (!config_json || !param || !values_json || !exit_code)
    return arg_error("null argument");
  *exit_code = 3;
  return guarded([&] {
    try {
      const json doc = parse_json_text(config_json, "config");
      const json vals = parse_json_text(values_json, "values");
      kpp::require(vals.is_array(), kpp::errc::config_error,
                   "sweep values must be a JSON array");
      std::vector<json> values(vals.begin(), vals.end());
      *exit_code = kpp::runner::sweep(doc, param, values, workers, quiet != 0);
    } catch (const kpp::error& e) {
      g_last_error = e.what();
      *exit_code = e.code() == kpp::errc::config_error ? 2 : 3;
    }
    return KPP_OK;
  });
}

kpp_status kpp_list_presets(char** out_json) {
  if (!out_json) return arg_error("null argument");
  *out_json = nullptr;
  return guarded([&] {
    json arr = json::array();
    for (const auto& p : kpp::runner::list_presets())
      arr.push_back({{"name", p.name}, {"description", p.description}});
    *out_json = dup_string(arr.dump(2));
    return KPP_OK;
  });
}

void kpp_string_free(char* s) { delete[] s; }

}  // extern "C"
