// fdris: solve one realization, run a parameter sweep, or run the oracle checks.
//
//   fdris solve    --config config/defaults.json --seed 7 --out out/
//   fdris sweep    --param ris_elements --values 20,60,100 --realizations 10 --out out/
//   fdris validate
//
// Exit codes: 1 config error, 2 solver failure, 3 validation failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdris/fdris.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;
constexpr int kValidationFailure = 3;

struct Settings {
  fdris::ScenarioConfig scenario;
  fdris::SolverConfig solver;
  fdris::NoRisMode no_ris_mode = fdris::NoRisMode::ZeroPhase;
  json effective;  // complete document with overrides applied as given
};

json complete_document(const json& file) {
  if (!file.is_object()) throw fdris::ConfigError("config file must hold a JSON object");
  for (auto it = file.begin(); it != file.end(); ++it)
    if (it.key() != "scenario" && it.key() != "solver" && it.key() != "no_ris_mode")
      throw fdris::ConfigError("unknown top-level config key: " + it.key());
  json doc;
  doc["scenario"] = fdris::scenario_from_json(file.value("scenario", json::object()));
  fdris::SolverConfig solver;
  try {
    if (file.contains("solver")) fdris::from_json(file.at("solver"), solver);
  } catch (const json::exception& e) {
    throw fdris::ConfigError(std::string("malformed solver config: ") + e.what());
  }
  doc["solver"] = solver;
  doc["no_ris_mode"] = file.value("no_ris_mode", std::string("zero_phase"));
  return doc;
}

// key=value with a dotted key; bare keys address the scenario section.
void apply_set(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw fdris::ConfigError("override must look like key=value: " + assignment);
  std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  const std::string head = key.substr(0, key.find('.'));
  if (head != "scenario" && head != "solver" && head != "no_ris_mode") key = "scenario." + key;
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  std::string pointer = "/" + key;
  for (char& ch : pointer)
    if (ch == '.') ch = '/';
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception&) {
    throw fdris::ConfigError("malformed override key: " + key);
  }
  if (!doc.contains(ptr)) throw fdris::ConfigError("unknown override key: " + key);
  doc[ptr] = parsed;
}

Settings load_settings(const std::string& path, const std::vector<std::string>& sets) {
  json file = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw fdris::ConfigError("cannot open config file: " + path);
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw fdris::ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
  }
  Settings s;
  s.effective = complete_document(file);
  for (const auto& a : sets) apply_set(s.effective, a);
  s.scenario = fdris::scenario_from_json(s.effective.at("scenario"));
  try {
    fdris::from_json(s.effective.at("solver"), s.solver);
    s.no_ris_mode = fdris::no_ris_mode_from_string(s.effective.at("no_ris_mode").get<std::string>());
  } catch (const json::exception& e) {
    throw fdris::ConfigError(std::string("malformed config: ") + e.what());
  }
  s.solver.power_bs_watt = s.scenario.power_bs_watt;
  s.solver.power_ue_watt = s.scenario.power_ue_watt;
  s.solver.validate();
  return s;
}

fs::path prepare_output(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw fdris::ConfigError("cannot create output directory: " + dir);
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw fdris::ConfigError("cannot write " + p.string());
  os << text;
  if (!os) throw fdris::ConfigError("failed writing " + p.string());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    if (item == "true") {
      out.push_back(1.0);
      continue;
    }
    if (item == "false") {
      out.push_back(0.0);
      continue;
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw fdris::ConfigError("sweep value is not a number: " + item);
    }
    if (used != item.size()) throw fdris::ConfigError("sweep value is not a number: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw fdris::ConfigError("--values is empty");
  return out;
}

void echo_config(const json& effective) {
  std::cout << "effective config:\n" << effective.dump(2) << "\n";
}

int run_solve(const Settings& s, std::uint64_t seed, const std::string& scheme_name, const std::string& phase,
              const std::string& out_dir, bool timing) {
  fdris::Scheme scheme = fdris::scheme_from_string(scheme_name);
  if (!phase.empty()) {
    const auto alg = fdris::phase_algorithm_from_string(phase);
    scheme = alg == fdris::PhaseAlgorithm::Ccm           ? fdris::Scheme::FdOptCcm
             : alg == fdris::PhaseAlgorithm::Sca         ? fdris::Scheme::FdOptSca
             : alg == fdris::PhaseAlgorithm::RandomFixed ? fdris::Scheme::FdRandomRis
                                                         : fdris::Scheme::FdNoRis;
  }
  const fs::path out = prepare_output(out_dir);
  echo_config(s.effective);

  fdris::HarnessOptions opt{s.solver, s.no_ris_mode};
  const fdris::ChannelSet ch = fdris::generate_realization(s.scenario, seed);
  const fdris::SolverReport rep = fdris::run_scheme(scheme, ch, s.scenario, opt, seed);

  json doc;
  doc["config"] = s.effective;
  doc["scheme"] = fdris::to_string(scheme);
  doc["seed"] = seed;
  doc["report"] = fdris::report_to_json(rep, timing);
  write_file(out / "report.json", doc.dump(2) + "\n");

  std::cout << std::setprecision(6) << "scheme " << fdris::to_string(scheme) << ", seed " << seed << "\n"
            << "  sum rate   " << rep.rates.sum_rate << " bit/s/Hz\n"
            << "  uplink     " << rep.rates.ul_sum << "\n"
            << "  downlink   " << rep.rates.dl_sum << "\n"
            << "  iterations " << rep.outer_iterations << " (" << fdris::to_string(rep.termination) << ")\n"
            << "  time       " << rep.timings.total_ms << " ms\n"
            << "  report     " << (out / "report.json").string() << "\n";
  if (!rep.ok()) {
    std::cerr << "fdris: solver failed: " << rep.error_message << "\n";
    return kSolverFailure;
  }
  return 0;
}

int run_sweep_cmd(const Settings& s, std::uint64_t seed, const std::string& param, const std::string& values,
                  int realizations, const std::string& schemes, int jobs, const std::string& out_dir, bool timing) {
  fdris::SweepSpec spec;
  spec.param = param;
  spec.values = parse_values(values);
  spec.realizations = realizations;
  spec.base = s.scenario;
  spec.base_seed = seed;
  spec.options = {s.solver, s.no_ris_mode};
  spec.jobs = jobs;
  if (!schemes.empty()) {
    spec.schemes.clear();
    for (const auto& name : split_list(schemes)) spec.schemes.push_back(fdris::scheme_from_string(name));
  }
  spec.validate();
  const fs::path out = prepare_output(out_dir);
  echo_config(s.effective);

  const fdris::ResultTable table = fdris::run_sweep(spec);

  std::ostringstream csv;
  fdris::write_csv(csv, table, timing);
  write_file(out / "results.csv", csv.str());

  json traces = json::array();
  for (const auto& r : table.rows)
    traces.push_back({{"scheme", fdris::to_string(r.scheme)},
                      {"param", r.param},
                      {"value", r.value},
                      {"seed", r.seed},
                      {"sum_rate_trace", r.trace},
                      {"error", r.error}});
  json meta{{"config", s.effective},
            {"sweep", {{"param", param}, {"values", spec.values}, {"realizations", realizations}, {"base_seed", seed}}},
            {"rows", traces}};
  write_file(out / "traces.json", meta.dump(1) + "\n");

  int failures = 0;
  std::cout << std::left << std::setw(15) << "scheme" << std::setw(12) << param << std::right << std::setw(6) << "n"
            << std::setw(12) << "sum" << std::setw(10) << "se" << std::setw(12) << "ul" << std::setw(12) << "dl"
            << "\n";
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& row : fdris::summarize(table)) {
    failures += row.failures;
    std::cout << std::left << std::setw(15) << fdris::to_string(row.scheme) << std::setw(12)
              << fdris::detail::format_number(row.value) << std::right << std::setw(6) << row.sum_rate.n
              << std::setw(12) << row.sum_rate.mean << std::setw(10) << row.sum_rate.stderr_ << std::setw(12)
              << row.ul_rate.mean << std::setw(12) << row.dl_rate.mean << "\n";
  }
  std::cout << "results " << (out / "results.csv").string() << "\n";
  if (failures > 0) {
    for (const auto& r : table.rows)
      if (!r.ok) std::cerr << "fdris: " << fdris::to_string(r.scheme) << " value " << r.value << " seed " << r.seed
                           << " failed: " << r.error << "\n";
    return kSolverFailure;
  }
  return 0;
}

int run_validate(int instances, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = fdris::run_validation(instances, seed);
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.passed;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << checks.size() << " checks, " << (all ? "all passed" : "FAILURES") << " in " << std::setprecision(3)
            << secs << " s\n";
  if (!all) {
    std::cerr << "fdris: validation failed\n";
    return kValidationFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cell full-duplex network with a reconfigurable surface: joint precoder and phase design"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", scheme = "fd_opt_sca", phase, param = "ris_elements", values, schemes;
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
  int realizations = 10, jobs = 1, instances = 10;
  bool timing = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (defaults when omitted)");
    sub->add_option("--set", sets, "override, e.g. --set sic_db=120 or --set solver.outer_tol=1e-5");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--timing", timing, "record wall-clock times in outputs");
  };
  CLI::App* solve = app.add_subcommand("solve", "solve one realization");
  add_common(solve);
  solve->add_option("--scheme", scheme, "fd_opt_ccm|fd_opt_sca|fd_random_ris|fd_no_ris|hd_opt_ris|hd_no_ris");
  solve->add_option("--phase", phase, "ccm|sca|none|random-fixed (selects the matching full-duplex scheme)");

  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo parameter sweep");
  add_common(sweep);
  sweep->add_option("--param", param, "ris_elements|sic_db|alpha_r|bs_tx_antennas|power_bs|y_user|x_ris|x_user|direct_links_enabled");
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--realizations", realizations, "realizations per value");
  sweep->add_option("--schemes", schemes, "comma-separated scheme list (default: all)");
  sweep->add_option("--jobs", jobs, "worker threads");

  CLI::App* validate = app.add_subcommand("validate", "run oracle checks on small instances");
  validate->add_option("--instances", instances, "random instances per check");
  validate->add_option("--seed", seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*validate) return run_validate(instances, seed);
    const Settings s = load_settings(config_path, sets);
    if (*solve) return run_solve(s, seed, scheme, phase, out_dir, timing);
    return run_sweep_cmd(s, seed, param, values, realizations, schemes, jobs, out_dir, timing);
  } catch (const fdris::ConfigError& e) {
    std::cerr << "fdris: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "fdris: " << e.what() << "\n";
    return kSolverFailure;
  }
}
