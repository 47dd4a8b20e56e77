#include "atls/atls.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <new>
#include <string>

#include "error.hpp"
#include "log.hpp"
#include "runner.hpp"

struct atls_config {
  atls::RunConfig config;
};

struct atls_run {
  atls::RunReport report;
  std::string summary_path;
};

namespace {

thread_local std::string last_error;

enum class Phase { Config, Run };

atls_status map_code(atls::ErrorCode code, Phase phase) {
  using atls::ErrorCode;
  switch (code) {
    case ErrorCode::SchemaError: return ATLS_ERR_SCHEMA;
    case ErrorCode::SemanticError: return ATLS_ERR_SEMANTIC;
    case ErrorCode::IoError: return ATLS_ERR_IO;
    case ErrorCode::NoConvergence: return ATLS_ERR_CONVERGENCE;
    case ErrorCode::BadDimension:
    case ErrorCode::EmptyDomain:
    case ErrorCode::EmptyLoadRegion: return ATLS_ERR_DOMAIN;
    default: return phase == Phase::Config ? ATLS_ERR_DOMAIN : ATLS_ERR_NUMERIC;
  }
}

template <typename F>
atls_status guard(Phase phase, F&& f) {
  try {
    last_error.clear();
    f();
    return ATLS_OK;
  } catch (const atls::Error& e) {
    last_error = e.what();
    return map_code(e.code(), phase);
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ATLS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ATLS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return ATLS_ERR_INTERNAL;
  }
}

atls_status invalid(const char* why) {
  last_error = why;
  return ATLS_ERR_INVALID_ARGUMENT;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

atls_config* build(atls::RunConfig rc) {
  atls::make_problem(rc);
  return new atls_config{std::move(rc)};
}

}  // namespace

extern "C" {

const char* atls_version(void) { return "1.0.0"; }

const char* atls_status_string(atls_status status) {
  switch (status) {
    case ATLS_OK: return "ok";
    case ATLS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ATLS_ERR_SCHEMA: return "schema error";
    case ATLS_ERR_SEMANTIC: return "semantic error";
    case ATLS_ERR_IO: return "i/o error";
    case ATLS_ERR_DOMAIN: return "invalid problem definition";
    case ATLS_ERR_CONVERGENCE: return "solver did not converge";
    case ATLS_ERR_NUMERIC: return "analysis failure";
    case ATLS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* atls_last_error(void) { return last_error.c_str(); }

void atls_string_free(char* s) { std::free(s); }

void atls_set_log_callback(atls_log_fn fn, void* user) {
  static const atls::LogSink original = atls::set_log_sink(nullptr);
  if (!fn) {
    atls::set_log_sink(original);
    return;
  }
  atls::set_log_sink([fn, user](atls::LogLevel level, const std::string& message) {
    fn(level == atls::LogLevel::Warning ? ATLS_LOG_WARNING : ATLS_LOG_INFO, message.c_str(), user);
  });
}

atls_status atls_config_load(const char* path, atls_config** out) {
  if (!path || !out) return invalid("path and out must not be null");
  *out = nullptr;
  return guard(Phase::Config, [&] { *out = build(atls::load_config(path)); });
}

atls_status atls_config_parse(const char* json_text, atls_config** out) {
  if (!json_text || !out) return invalid("json_text and out must not be null");
  *out = nullptr;
  return guard(Phase::Config, [&] { *out = build(atls::parse_config(json_text)); });
}

void atls_config_free(atls_config* config) { delete config; }

atls_status atls_config_echo(const atls_config* config, char** out_json) {
  if (!config || !out_json) return invalid("config and out_json must not be null");
  return guard(Phase::Config, [&] { *out_json = dup(atls::echo_config(config->config)); });
}

atls_status atls_config_set_threads(atls_config* config, int threads) {
  if (!config) return invalid("config must not be null");
  if (threads < 1) return invalid("thread count must be >= 1");
  config->config.solver.threads = threads;
  return ATLS_OK;
}

atls_status atls_config_set_output_dir(atls_config* config, const char* directory) {
  if (!config || !directory || !*directory) return invalid("config and a non-empty directory are required");
  config->config.output.directory = directory;
  return ATLS_OK;
}

atls_status atls_config_output_dir(const atls_config* config, char** out) {
  if (!config || !out) return invalid("config and out must not be null");
  return guard(Phase::Config, [&] { *out = dup(config->config.output.directory); });
}

atls_status atls_run_start(const atls_config* config, atls_progress_fn progress, atls_cancel_fn cancel, void* user,
                           atls_run** out) {
  if (!config || !out) return invalid("config and out must not be null");
  *out = nullptr;
  return guard(Phase::Run, [&] {
    std::vector<std::string> ids;
    for (const auto& c : config->config.constraints) ids.push_back(c.id);
    atls::RunnerCallbacks cb;
    if (progress)
      cb.on_iteration = [&](const atls::IterationRecord& r) {
        std::vector<atls_constraint_progress> cs;
        for (std::size_t i = 0; i < r.constraints.size(); ++i) {
          const auto& c = r.constraints[i];
          cs.push_back({ids[i].c_str(), c.q_over_q0, c.g, c.mu, c.gamma, c.hard_violated ? 1 : 0});
        }
        const atls_iteration it{r.k,           r.v, r.dv, r.accepted ? 1 : 0, atls::to_string(r.outcome), r.J,
                                r.inner_iterations, cs.size(), cs.data()};
        progress(&it, user);
      };
    if (cancel) cb.cancelled = [&] { return cancel(user) != 0; };
    auto run = std::make_unique<atls_run>();
    run->report = atls::run_to_directory(config->config, cb);
    run->summary_path = (std::filesystem::path(config->config.output.directory) / "summary.json").string();
    *out = run.release();
  });
}

void atls_run_free(atls_run* run) { delete run; }

atls_termination atls_run_termination(const atls_run* run) {
  if (!run) return ATLS_TERM_STEP_COLLAPSED;
  switch (run->report.result.termination) {
    case atls::Termination::StepCollapsed: return ATLS_TERM_STEP_COLLAPSED;
    case atls::Termination::InfeasibleAtFirstLevel: return ATLS_TERM_INFEASIBLE_AT_FIRST_LEVEL;
    case atls::Termination::MinimumVolume: return ATLS_TERM_MINIMUM_VOLUME;
    case atls::Termination::IterationLimit: return ATLS_TERM_ITERATION_LIMIT;
    case atls::Termination::Cancelled: return ATLS_TERM_CANCELLED;
  }
  return ATLS_TERM_STEP_COLLAPSED;
}

double atls_run_volume_fraction(const atls_run* run) {
  return run ? run->report.result.topology.volume_fraction() : std::nan("");
}

int atls_run_accepted_steps(const atls_run* run) { return run ? run->report.result.accepted_steps : -1; }

atls_status atls_run_summary_json(const atls_run* run, char** out_json) {
  if (!run || !out_json) return invalid("run and out_json must not be null");
  return guard(Phase::Run, [&] {
    const auto& path = run->summary_path;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw atls::Error(atls::ErrorCode::IoError, "summary '" + path + "' is not readable");
    *out_json = dup(std::string(std::istreambuf_iterator<char>(in), {}));
  });
}

atls_status atls_analyze(const atls_config* config, char** out_json) {
  if (!config || !out_json) return invalid("config and out_json must not be null");
  return guard(Phase::Run, [&] {
    const auto report = atls::analyze_baseline(config->config);
    nlohmann::ordered_json j;
    j["cases"] = nlohmann::ordered_json::array();
    for (const auto& c : report.cases) {
      nlohmann::ordered_json row{{"id", c.id}, {"J0", c.J0}, {"sigma0", c.sigma0}};
      row["P0"] = std::isnan(c.P0) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.P0);
      j["cases"].push_back(row);
    }
    j["lambda0"] = report.lambda0;
    j["constraints"] = nlohmann::ordered_json::array();
    for (const auto& [id, q0] : report.constraint_q0) j["constraints"].push_back({{"id", id}, {"q0", q0}});
    *out_json = dup(j.dump(2));
  });
}

atls_status atls_export(const atls_config* config, const char* source, const char* out_dir, char** out_json) {
  if (!config || !source || !out_dir) return invalid("config, source and out_dir must not be null");
  return guard(Phase::Run, [&] {
    const auto written = atls::export_from(config->config, source, out_dir);
    if (out_json) *out_json = dup(nlohmann::json(written).dump());
  });
}

}  // extern "C"
