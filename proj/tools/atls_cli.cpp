#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "atls/atls.h"

namespace {

enum Exit { kSuccess = 0, kConfigError = 1, kRuntimeError = 2, kInfeasible = 3 };

std::atomic<bool> interrupted{false};

extern "C" void on_sigint(int) { interrupted = true; }

struct Config {
  atls_config* handle = nullptr;
  ~Config() { atls_config_free(handle); }
};

struct Text {
  char* s = nullptr;
  ~Text() { atls_string_free(s); }
};

void report(const char* what, atls_status status) {
  std::cerr << "atls: " << what << ": " << atls_status_string(status) << ": " << atls_last_error() << "\n";
}

// Thread count: --threads beats ATLS_NUM_THREADS beats the config.
bool load(const std::string& path, std::optional<int> threads, Config& config) {
  const atls_status st = atls_config_load(path.c_str(), &config.handle);
  if (st != ATLS_OK) {
    report(("config '" + path + "'").c_str(), st);
    return false;
  }
  if (!threads) {
    if (const char* env = std::getenv("ATLS_NUM_THREADS"); env && *env) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (*end != '\0' || n < 1 || n > 4096) {
        std::cerr << "atls: ATLS_NUM_THREADS='" << env << "' is not a positive integer\n";
        return false;
      }
      threads = int(n);
    }
  }
  if (threads && atls_config_set_threads(config.handle, *threads) != ATLS_OK) {
    report("threads", ATLS_ERR_INVALID_ARGUMENT);
    return false;
  }
  return true;
}

void print_progress(const atls_iteration* it, void*) {
  char head[160];
  std::snprintf(head, sizeof head, "k=%-4d v=%.5f dv=%.5f %-19s inner=%d", it->k, it->v, it->dv, it->outcome,
                it->inner_iterations);
  std::string line = head;
  for (size_t i = 0; i < it->constraint_count; ++i) {
    const auto& c = it->constraints[i];
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %s q/q0=%.4f g=%+.4f%s", c.id, c.q_over_q0, c.g, c.hard_violated ? " HARD" : "");
    line += buf;
  }
  std::cout << line << std::endl;
}

int cancel_requested(void*) { return interrupted.load() ? 1 : 0; }

void verbose_log(atls_log_level level, const char* message, void*) {
  std::cerr << (level == ATLS_LOG_WARNING ? "warning: " : "info: ") << message << "\n";
}

int cmd_run(const std::string& path, std::optional<int> threads, const std::string& out_dir, bool quiet) {
  Config config;
  if (!load(path, threads, config)) return kConfigError;
  if (!out_dir.empty() && atls_config_set_output_dir(config.handle, out_dir.c_str()) != ATLS_OK) {
    report("output directory", ATLS_ERR_INVALID_ARGUMENT);
    return kConfigError;
  }
  std::signal(SIGINT, on_sigint);
  atls_run* run = nullptr;
  const atls_status st = atls_run_start(config.handle, quiet ? nullptr : print_progress, cancel_requested, nullptr, &run);
  std::signal(SIGINT, SIG_DFL);
  if (st != ATLS_OK) {
    report("run failed", st);
    return kRuntimeError;
  }
  Text dir;
  atls_config_output_dir(config.handle, &dir.s);
  const atls_termination term = atls_run_termination(run);
  const double v = atls_run_volume_fraction(run);
  atls_run_free(run);

  static const char* names[] = {"step collapsed", "infeasible at the first volume level", "minimum volume",
                                "iteration limit", "cancelled"};
  std::printf("terminated: %s, final v=%.4f, outputs in %s\n", names[term], v, dir.s);
  if (term == ATLS_TERM_INFEASIBLE_AT_FIRST_LEVEL) {
    std::cerr << "atls: a hard constraint is violated at the first volume step; no feasible design below v=1\n";
    return kInfeasible;
  }
  if (term == ATLS_TERM_CANCELLED) {
    std::cerr << "atls: interrupted; partial history written\n";
    return kRuntimeError;
  }
  return kSuccess;
}

int cmd_check(const std::string& path, std::optional<int> threads) {
  Config config;
  if (!load(path, threads, config)) return kConfigError;
  Text echo;
  if (const auto st = atls_config_echo(config.handle, &echo.s); st != ATLS_OK) {
    report("echo", st);
    return kConfigError;
  }
  std::cout << echo.s;
  return kSuccess;
}

std::string number(const nlohmann::json& v) {
  if (v.is_null()) return "none";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v.get<double>());
  return buf;
}

int cmd_analyze(const std::string& path, std::optional<int> threads) {
  Config config;
  if (!load(path, threads, config)) return kConfigError;
  Text out;
  if (const auto st = atls_analyze(config.handle, &out.s); st != ATLS_OK) {
    report("analysis failed", st);
    return kRuntimeError;
  }
  const auto j = nlohmann::json::parse(out.s);
  std::printf("%-16s %-14s %-14s %-14s\n", "load case", "J0", "sigma0", "P0");
  for (const auto& c : j["cases"])
    std::printf("%-16s %-14s %-14s %-14s\n", c["id"].get<std::string>().c_str(), number(c["J0"]).c_str(),
                number(c["sigma0"]).c_str(), number(c["P0"]).c_str());
  std::printf("lambda0 (fundamental eigenvalue) %s\n", number(j["lambda0"]).c_str());
  if (!j["constraints"].empty()) {
    std::printf("\n%-16s %-14s\n", "constraint", "q0");
    for (const auto& c : j["constraints"])
      std::printf("%-16s %-14s\n", c["id"].get<std::string>().c_str(), number(c["q0"]).c_str());
  }
  return kSuccess;
}

int cmd_export(const std::string& path, const std::string& source, std::optional<int> threads, std::string out_dir) {
  Config config;
  if (!load(path, threads, config)) return kConfigError;
  if (out_dir.empty()) {
    Text dir;
    atls_config_output_dir(config.handle, &dir.s);
    out_dir = std::string(dir.s) + "/export";
  }
  Text written;
  if (const auto st = atls_export(config.handle, source.c_str(), out_dir.c_str(), &written.s); st != ATLS_OK) {
    report(("export of '" + source + "'").c_str(), st);
    return kRuntimeError;
  }
  for (const auto& p : nlohmann::json::parse(written.s)) std::cout << "wrote " << p.get<std::string>() << "\n";
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel topology optimization with topological level sets and augmented Lagrangian constraints"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(atls_version()));
  bool verbose = false;
  std::optional<int> threads;
  app.add_flag("-v,--verbose", verbose, "Print solver log messages to stderr");
  app.add_option("-j,--threads", threads, "Worker threads (overrides ATLS_NUM_THREADS and the config)")
      ->check(CLI::PositiveNumber);

  std::string config, source, out_dir;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Optimize and write history, summary, snapshots and VTK");
  run->add_option("config", config, "Run configuration (JSON)")->required();
  run->add_option("-o,--output-dir", out_dir, "Override output.directory");
  run->add_flag("-q,--quiet", quiet, "No per-iteration progress lines");
  auto* check = app.add_subcommand("check", "Validate a configuration and print it with every default filled in");
  check->add_option("config", config, "Run configuration (JSON)")->required();
  auto* analyze = app.add_subcommand("analyze", "Full-design analyses only: J0, sigma0, lambda0, P0");
  analyze->add_option("config", config, "Run configuration (JSON)")->required();
  auto* exp = app.add_subcommand("export", "Re-export artifacts from any file a run wrote");
  exp->add_option("config", config, "Run configuration (JSON)")->required();
  exp->add_option("snapshot", source, "A .topo, .vtk, .obj, .csv or summary .json written by run")->required();
  exp->add_option("-o,--output-dir", out_dir, "Destination (default: <output.directory>/export)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  if (verbose) atls_set_log_callback(verbose_log, nullptr);

  try {
    if (*run) return cmd_run(config, threads, out_dir, quiet);
    if (*check) return cmd_check(config, threads);
    if (*analyze) return cmd_analyze(config, threads);
    if (*exp) return cmd_export(config, source, threads, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "atls: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
