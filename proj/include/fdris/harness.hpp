#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fdris/bcd.hpp"
#include "fdris/channel.hpp"
#include "fdris/scenario.hpp"

namespace fdris {

enum class Scheme { FdOptCcm, FdOptSca, FdRandomRis, FdNoRis, HdOptRis, HdNoRis };
enum class NoRisMode { ZeroPhase, NoReflection };

inline const std::vector<Scheme>& all_schemes() {
  static const std::vector<Scheme> s{Scheme::FdOptCcm, Scheme::FdOptSca, Scheme::FdRandomRis,
                                     Scheme::FdNoRis,  Scheme::HdOptRis, Scheme::HdNoRis};
  return s;
}

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::FdOptCcm: return "fd_opt_ccm";
    case Scheme::FdOptSca: return "fd_opt_sca";
    case Scheme::FdRandomRis: return "fd_random_ris";
    case Scheme::FdNoRis: return "fd_no_ris";
    case Scheme::HdOptRis: return "hd_opt_ris";
    case Scheme::HdNoRis: return "hd_no_ris";
  }
  return "unknown";
}

inline Scheme scheme_from_string(const std::string& s) {
  for (Scheme x : all_schemes())
    if (s == to_string(x)) return x;
  throw ConfigError("unknown scheme: " + s);
}

inline NoRisMode no_ris_mode_from_string(const std::string& s) {
  if (s == "zero_phase") return NoRisMode::ZeroPhase;
  if (s == "no_reflection") return NoRisMode::NoReflection;
  throw ConfigError("unknown no-RIS mode: " + s);
}

inline const char* to_string(NoRisMode m) { return m == NoRisMode::ZeroPhase ? "zero_phase" : "no_reflection"; }

struct HarnessOptions {
  SolverConfig solver;  ///< tolerances and line search; algorithm and budgets are set per scheme
  NoRisMode no_ris_mode = NoRisMode::ZeroPhase;
};

namespace detail {

inline SolverConfig scheme_solver(Scheme s, const ScenarioConfig& sc, const HarnessOptions& opt) {
  SolverConfig c = opt.solver;
  c.power_bs_watt = sc.power_bs_watt;
  c.power_ue_watt = sc.power_ue_watt;
  c.phase_init = PhaseInit::Random;
  switch (s) {
    case Scheme::FdOptCcm: c.phase_algorithm = PhaseAlgorithm::Ccm; break;
    case Scheme::FdOptSca:
    case Scheme::HdOptRis: c.phase_algorithm = PhaseAlgorithm::Sca; break;
    case Scheme::FdRandomRis: c.phase_algorithm = PhaseAlgorithm::RandomFixed; break;
    case Scheme::FdNoRis:
    case Scheme::HdNoRis:
      c.phase_algorithm = PhaseAlgorithm::None;
      if (opt.no_ris_mode == NoRisMode::ZeroPhase) c.phase_init = PhaseInit::Zero;
      break;
  }
  return c;
}

inline bool scheme_is_no_ris(Scheme s) { return s == Scheme::FdNoRis || s == Scheme::HdNoRis; }

// Half-duplex: an uplink-only and a downlink-only sub-network share the time
// slot equally; each is solved on its own and every rate is halved.
inline SolverReport combine_half_duplex(SolverReport ul, SolverReport dl) {
  SolverReport out;
  const std::size_t n = std::max(ul.sum_rate_trace.size(), dl.sum_rate_trace.size());
  auto at = [](const std::vector<double>& v, std::size_t i) { return v.empty() ? 0.0 : v[std::min(i, v.size() - 1)]; };
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 0.5 * at(ul.sum_rate_trace, i);
    const double d = 0.5 * at(dl.sum_rate_trace, i);
    out.ul_rate_trace.push_back(u);
    out.dl_rate_trace.push_back(d);
    out.sum_rate_trace.push_back(u + d);
  }
  if (!ul.ok() || !dl.ok()) {
    out.termination = Termination::Error;
    out.error_message = !ul.ok() ? "uplink half: " + ul.error_message : "downlink half: " + dl.error_message;
  } else if (ul.termination == Termination::Converged && dl.termination == Termination::Converged) {
    out.termination = Termination::Converged;
  } else {
    out.termination = Termination::IterationCap;
  }
  out.outer_iterations = std::max(ul.outer_iterations, dl.outer_iterations);
  out.phase_iterations_total = ul.phase_iterations_total + dl.phase_iterations_total;
  out.phase_stalls = ul.phase_stalls + dl.phase_stalls;
  out.timings.decoders_ms = ul.timings.decoders_ms + dl.timings.decoders_ms;
  out.timings.precoders_ms = ul.timings.precoders_ms + dl.timings.precoders_ms;
  out.timings.phase_ms = ul.timings.phase_ms + dl.timings.phase_ms;
  out.timings.evaluate_ms = ul.timings.evaluate_ms + dl.timings.evaluate_ms;
  out.timings.total_ms = ul.timings.total_ms + dl.timings.total_ms;
  out.max_power_excess = std::max(ul.max_power_excess, dl.max_power_excess);
  out.max_slackness = std::max(ul.max_slackness, dl.max_slackness);
  out.max_surrogate_gap = std::max(ul.max_surrogate_gap, dl.max_surrogate_gap);

  out.precoders.ul = std::move(ul.precoders.ul);
  out.precoders.dl = std::move(dl.precoders.dl);
  // The surface may be reconfigured between halves; the downlink one is kept.
  out.phase = std::move(dl.phase);
  out.rates.ul = ul.rates.ul;
  out.rates.dl = dl.rates.dl;
  for (auto& cell : out.rates.ul)
    for (double& r : cell) r *= 0.5;
  for (auto& cell : out.rates.dl)
    for (double& r : cell) r *= 0.5;
  out.rates.ul_sum = 0.5 * ul.rates.ul_sum;
  out.rates.dl_sum = 0.5 * dl.rates.dl_sum;
  out.rates.sum_rate = out.rates.ul_sum + out.rates.dl_sum;
  return out;
}

}  // namespace detail

/// Runs one benchmark scheme on one realization.
inline SolverReport run_scheme(Scheme scheme, const ChannelSet& channels, const ScenarioConfig& scenario,
                               const HarnessOptions& opt, std::uint64_t seed) {
  const SolverConfig cfg = detail::scheme_solver(scheme, scenario, opt);
  const bool strip = detail::scheme_is_no_ris(scheme) && opt.no_ris_mode == NoRisMode::NoReflection;
  const ChannelSet& base = channels;
  ChannelSet stripped;
  if (strip) stripped = without_reflection(base);
  const ChannelSet& ch = strip ? stripped : base;

  if (scheme == Scheme::HdOptRis || scheme == Scheme::HdNoRis) {
    const ChannelSet ul = restrict_direction(ch, true);
    const ChannelSet dl = restrict_direction(ch, false);
    SolverReport r_ul = ul.dims.ul_users > 0 ? solve(ul, cfg, seed) : SolverReport{};
    SolverReport r_dl = dl.dims.dl_users > 0 ? solve(dl, cfg, seed) : SolverReport{};
    if (ul.dims.ul_users == 0) r_ul.termination = Termination::Converged;
    if (dl.dims.dl_users == 0) r_dl.termination = Termination::Converged;
    return detail::combine_half_duplex(std::move(r_ul), std::move(r_dl));
  }
  return solve(ch, cfg, seed);
}

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p{"ris_elements", "sic_db", "alpha_r", "bs_tx_antennas", "power_bs",
                                          "y_user",       "x_ris",  "x_user",  "direct_links_enabled"};
  return p;
}

/// Sets a swept parameter on a copy of `base` and validates the result.
inline ScenarioConfig apply_sweep_value(const ScenarioConfig& base, const std::string& param, double value) {
  auto integral = [&](const char* key) {
    if (value != std::floor(value)) throw ConfigError(std::string(key) + " must be an integer");
    return apply_override(base, key, std::to_string(static_cast<long long>(value)));
  };
  auto real = [&](const char* key) { return apply_override(base, key, nlohmann::json(value).dump()); };
  if (param == "ris_elements") return integral("ris_elements");
  if (param == "bs_tx_antennas") return integral("bs_tx_antennas");
  if (param == "sic_db") return real("sic_db");
  if (param == "alpha_r") return real("alpha_r");
  if (param == "power_bs") return real("power_bs_watt");
  if (param == "y_user") return real("user_center_y");
  if (param == "x_ris") return real("ris_position.0");
  if (param == "x_user") return real("user_center_x");
  if (param == "direct_links_enabled") {
    if (value != 0.0 && value != 1.0) throw ConfigError("direct_links_enabled takes 0 or 1");
    return apply_override(base, "direct_links_enabled", value != 0.0 ? "true" : "false");
  }
  throw ConfigError("unknown sweep parameter: " + param);
}

struct SweepSpec {
  std::string param = "ris_elements";
  std::vector<double> values;
  int realizations = 1;
  ScenarioConfig base;
  std::uint64_t base_seed = 1;
  std::vector<Scheme> schemes = all_schemes();
  HarnessOptions options;
  int jobs = 1;

  void validate() const {
    if (values.empty()) throw ConfigError("sweep value list is empty");
    if (realizations < 1) throw ConfigError("realizations must be >= 1");
    if (schemes.empty()) throw ConfigError("scheme list is empty");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    bool known = false;
    for (const auto& p : sweep_parameters()) known = known || p == param;
    if (!known) throw ConfigError("unknown sweep parameter: " + param);
    options.solver.validate();
    // Surface every bad value before any work starts.
    for (double v : values) apply_sweep_value(base, param, v);
  }
};

struct ResultRow {
  Scheme scheme = Scheme::FdOptSca;
  std::string param;
  double value = 0.0;
  std::uint64_t seed = 0;
  double sum_rate = std::numeric_limits<double>::quiet_NaN();
  double ul_rate = std::numeric_limits<double>::quiet_NaN();
  double dl_rate = std::numeric_limits<double>::quiet_NaN();
  int outer_iters = -1;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
  std::vector<double> trace;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

/// Rows ordered by value, then realization, then scheme (as listed in the spec),
/// independent of `jobs`.
inline ResultTable run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t n_cells = spec.values.size() * static_cast<std::size_t>(spec.realizations);
  const std::size_t n_schemes = spec.schemes.size();
  ResultTable table;
  table.rows.resize(n_cells * n_schemes);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t vi = cell / spec.realizations;
    const int r = static_cast<int>(cell % spec.realizations);
    const double value = spec.values[vi];
    const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(r);
    for (std::size_t s = 0; s < n_schemes; ++s) {
      ResultRow& row = table.rows[cell * n_schemes + s];
      row.scheme = spec.schemes[s];
      row.param = spec.param;
      row.value = value;
      row.seed = seed;
    }
    try {
      const ScenarioConfig sc = apply_sweep_value(spec.base, spec.param, value);
      const ChannelSet ch = generate_realization(sc, seed);
      for (std::size_t s = 0; s < n_schemes; ++s) {
        ResultRow& row = table.rows[cell * n_schemes + s];
        try {
          const SolverReport rep = run_scheme(row.scheme, ch, sc, spec.options, seed);
          row.wall_ms = rep.timings.total_ms;
          row.outer_iters = rep.outer_iterations;
          row.trace = rep.sum_rate_trace;
          if (rep.ok()) {
            row.ok = true;
            row.sum_rate = rep.rates.sum_rate;
            row.ul_rate = rep.rates.ul_sum;
            row.dl_rate = rep.rates.dl_sum;
          } else {
            row.outer_iters = -1;
            row.error = rep.error_message;
          }
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t s = 0; s < n_schemes; ++s) table.rows[cell * n_schemes + s].error = e.what();
    }
  };

  const int workers = static_cast<int>(std::min<std::size_t>(spec.jobs, n_cells));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < n_cells; c = next++) run_cell(c);
      });
    for (auto& t : pool) t.join();
  }
  return table;
}

namespace detail {

// Shortest round-trip representation; "nan" for missing values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "scheme,param,value,seed,sum_rate_bps_hz,ul_rate_bps_hz,dl_rate_bps_hz,outer_iters,wall_ms";

/// Wall time is written as 0 unless `with_timing`, keeping reruns byte-identical.
inline void write_csv(std::ostream& os, const ResultTable& t, bool with_timing = false) {
  os << kCsvHeader << '\n';
  for (const auto& r : t.rows) {
    os << to_string(r.scheme) << ',' << r.param << ',' << detail::format_number(r.value) << ',' << r.seed << ','
       << detail::format_number(r.sum_rate) << ',' << detail::format_number(r.ul_rate) << ','
       << detail::format_number(r.dl_rate) << ',' << r.outer_iters << ','
       << detail::format_number(with_timing ? r.wall_ms : 0.0) << '\n';
  }
}

struct SummaryStat {
  int n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
};

inline SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  double sum = 0.0;
  for (double x : xs)
    if (!std::isnan(x)) {
      sum += x;
      ++s.n;
    }
  if (s.n == 0) return s;
  s.mean = sum / s.n;
  if (s.n < 2) {
    s.stderr_ = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double x : xs)
    if (!std::isnan(x)) ss += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(ss / (s.n - 1) / s.n);
  return s;
}

struct SummaryRow {
  Scheme scheme;
  double value;
  int failures = 0;
  SummaryStat sum_rate, ul_rate, dl_rate;
};

/// Mean and standard error per (scheme, value), in first-appearance order.
inline std::vector<SummaryRow> summarize(const ResultTable& t) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const auto& r : t.rows) {
    std::size_t g = 0;
    while (g < out.size() && !(out[g].scheme == r.scheme && out[g].value == r.value)) ++g;
    if (g == out.size()) {
      out.push_back({r.scheme, r.value});
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> s, u, d;
    for (const ResultRow* r : groups[g]) {
      if (!r->ok) ++out[g].failures;
      s.push_back(r->sum_rate);
      u.push_back(r->ul_rate);
      d.push_back(r->dl_rate);
    }
    out[g].sum_rate = summarize(s);
    out[g].ul_rate = summarize(u);
    out[g].dl_rate = summarize(d);
  }
  return out;
}

}  // namespace fdris
