#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdris/network.hpp"
#include "fdris/phase_opt.hpp"
#include "fdris/wmmse.hpp"

namespace fdris {

enum class PhaseAlgorithm { Ccm, Sca, None, RandomFixed };
enum class PhaseInit { Random, Zero };

inline const char* to_string(PhaseAlgorithm a) {
  switch (a) {
    case PhaseAlgorithm::Ccm: return "ccm";
    case PhaseAlgorithm::Sca: return "sca";
    case PhaseAlgorithm::None: return "none";
    case PhaseAlgorithm::RandomFixed: return "random-fixed";
  }
  return "unknown";
}

inline PhaseAlgorithm phase_algorithm_from_string(const std::string& s) {
  if (s == "ccm") return PhaseAlgorithm::Ccm;
  if (s == "sca") return PhaseAlgorithm::Sca;
  if (s == "none") return PhaseAlgorithm::None;
  if (s == "random-fixed" || s == "random_fixed") return PhaseAlgorithm::RandomFixed;
  throw ConfigError("unknown phase algorithm: " + s);
}

struct SolverConfig {
  PhaseAlgorithm phase_algorithm = PhaseAlgorithm::Sca;
  /// Starting surface configuration. RandomFixed always starts (and stays) random.
  PhaseInit phase_init = PhaseInit::Random;
  double outer_tol = 1e-4;
  int outer_max_iter = 300;
  double phase_tol = 1e-5;
  int phase_max_iter = 500;
  LineSearchConfig line_search;
  BisectionOptions bisection;
  double power_bs_watt = 1.0;
  double power_ue_watt = 0.2;

  void validate() const {
    if (!(outer_tol > 0.0)) throw ConfigError("outer_tol must be > 0");
    if (outer_max_iter < 1) throw ConfigError("outer_max_iter must be >= 1");
    if (!(phase_tol > 0.0)) throw ConfigError("phase_tol must be > 0");
    if (phase_max_iter < 1) throw ConfigError("phase_max_iter must be >= 1");
    if (!(power_bs_watt > 0.0) || !(power_ue_watt > 0.0)) throw ConfigError("power budgets must be > 0");
    line_search.validate();
  }

  bool optimizes_phase() const {
    return phase_algorithm == PhaseAlgorithm::Ccm || phase_algorithm == PhaseAlgorithm::Sca;
  }
};

enum class Termination { Converged, IterationCap, Error };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::Error: return "error";
  }
  return "unknown";
}

struct BlockTimings {
  double decoders_ms = 0.0;
  double precoders_ms = 0.0;
  double phase_ms = 0.0;
  double evaluate_ms = 0.0;
  double total_ms = 0.0;
};

struct SolverReport {
  std::vector<double> sum_rate_trace;  ///< entry 0 is the initial point
  std::vector<double> ul_rate_trace;
  std::vector<double> dl_rate_trace;
  Termination termination = Termination::IterationCap;
  std::string error_message;
  int outer_iterations = 0;
  int phase_iterations_total = 0;
  int phase_stalls = 0;
  BlockTimings timings;
  PrecoderSet precoders;
  PhaseState phase;
  RateBreakdown rates;
  /// Worst relative budget excess over all iterations (<= 0 when always feasible).
  double max_power_excess = -1.0;
  /// Worst |lambda (p - P)| / P over all multiplier searches.
  double max_slackness = 0.0;
  /// Worst |surrogate - rate| right after each decoder/weight update.
  double max_surrogate_gap = 0.0;

  double final_sum_rate() const { return sum_rate_trace.empty() ? 0.0 : sum_rate_trace.back(); }
  bool ok() const { return termination != Termination::Error; }
};

namespace detail {

inline Rng solver_rng(std::uint64_t seed) {
  // Separate stream from the channel generator fed with the same seed.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedU};
  return Rng(seq);
}

inline CMat scaled_to_power(CMat m, double target) {
  const double p = m.squaredNorm();
  if (p > 0.0) m *= std::sqrt(target / p);
  return m;
}

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

/// Random Gaussian precoders meeting every budget with equality, and uniform
/// phases (zeros under PhaseInit::Zero). Precoders are drawn before phases so
/// the same seed gives the same F under every phase option.
inline std::pair<PrecoderSet, PhaseState> initialize(const ChannelSet& ch, const SolverConfig& cfg, std::uint64_t seed) {
  const Dimensions& d = ch.dims;
  Rng rng = detail::solver_rng(seed);
  PrecoderSet f = PrecoderSet::zeros(d);
  for (int l = 0; l < d.cells; ++l) {
    if (d.dl_users == 0) continue;
    double total = 0.0;
    for (int k = 0; k < d.dl_users; ++k) {
      f.dl[l][k] = detail::complex_gaussian(d.bs_tx, d.dl_streams, rng);
      total += f.dl[l][k].squaredNorm();
    }
    const double s = std::sqrt(cfg.power_bs_watt / total);
    for (auto& m : f.dl[l]) m *= s;
  }
  for (int l = 0; l < d.cells; ++l)
    for (int k = 0; k < d.ul_users; ++k)
      f.ul[l][k] = detail::scaled_to_power(detail::complex_gaussian(d.ue_tx, d.ul_streams, rng), cfg.power_ue_watt);
  PhaseState phase = PhaseState::random(d.ris, rng);
  if (cfg.phase_init == PhaseInit::Zero && cfg.phase_algorithm != PhaseAlgorithm::RandomFixed)
    phase = PhaseState::zeros(d.ris);
  return {std::move(f), std::move(phase)};
}

/// Block coordinate ascent on the sum rate: decoders/weights, precoders, then
/// (optionally) the surface, until the relative sum-rate change drops below
/// outer_tol. Errors inside a block end the run with a partial report.
inline SolverReport solve_from(const ChannelSet& ch, const SolverConfig& cfg, PrecoderSet f, PhaseState phase) {
  cfg.validate();
  const Dimensions& d = ch.dims;
  SolverReport rep;
  const auto t_start = detail::Clock::now();

  auto record = [&](const RateBreakdown& r) {
    rep.sum_rate_trace.push_back(r.sum_rate);
    rep.ul_rate_trace.push_back(r.ul_sum);
    rep.dl_rate_trace.push_back(r.dl_sum);
    rep.rates = r;
  };

  try {
    if (phase.size() != d.ris) throw DimensionError("solve: phase length != surface size");
    EquivalentChannels eq = equivalent_channels(ch, phase);
    record(sum_rate(eq, f));
    rep.max_power_excess = f.max_relative_excess(cfg.power_bs_watt, cfg.power_ue_watt);

    for (int t = 1; t <= cfg.outer_max_iter; ++t) {
      rep.outer_iterations = t;
      auto t0 = detail::Clock::now();
      const AuxiliarySet aux = update_auxiliary(eq, f);
      rep.timings.decoders_ms += detail::ms_since(t0);
      const double gap = std::abs(total_surrogate_rate(aux, d) - rep.sum_rate_trace.back());
      rep.max_surrogate_gap = std::max(rep.max_surrogate_gap, gap);

      t0 = detail::Clock::now();
      PrecoderUpdate up = update_all_precoders(eq, aux, cfg.power_bs_watt, cfg.power_ue_watt, cfg.bisection);
      rep.timings.precoders_ms += detail::ms_since(t0);
      f = std::move(up.precoders);
      for (const auto& s : up.solves) rep.max_slackness = std::max(rep.max_slackness, s.slackness());
      rep.max_power_excess = std::max(rep.max_power_excess, f.max_relative_excess(cfg.power_bs_watt, cfg.power_ue_watt));

      if (cfg.optimizes_phase()) {
        t0 = detail::Clock::now();
        const QuadraticForm qf = build_quadratic_form(ch, f, aux);
        const PhaseResult pr = cfg.phase_algorithm == PhaseAlgorithm::Ccm
                                   ? ccm_minimize(qf, phase.phi(), cfg.line_search, cfg.phase_tol, cfg.phase_max_iter)
                                   : sca_minimize(qf, phase.theta(), cfg.line_search, cfg.phase_tol, cfg.phase_max_iter);
        rep.phase_iterations_total += pr.iterations;
        if (pr.termination == PhaseTermination::Stalled) ++rep.phase_stalls;
        phase = PhaseState(pr.theta);
        rep.timings.phase_ms += detail::ms_since(t0);
      }

      t0 = detail::Clock::now();
      eq = equivalent_channels(ch, phase);
      const double prev = rep.sum_rate_trace.back();
      record(sum_rate(eq, f));
      rep.timings.evaluate_ms += detail::ms_since(t0);

      const double now = rep.sum_rate_trace.back();
      if (std::abs(now) < 1e-12 || std::abs(now - prev) <= cfg.outer_tol * std::abs(now)) {
        rep.termination = Termination::Converged;
        break;
      }
    }
  } catch (const std::exception& e) {
    rep.termination = Termination::Error;
    rep.error_message = e.what();
  }
  rep.precoders = std::move(f);
  rep.phase = std::move(phase);
  rep.timings.total_ms = detail::ms_since(t_start);
  return rep;
}

inline SolverReport solve(const ChannelSet& ch, const SolverConfig& cfg, std::uint64_t seed) {
  auto [f, phase] = initialize(ch, cfg, seed);
  return solve_from(ch, cfg, std::move(f), std::move(phase));
}

inline void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{{"phase_algorithm", to_string(c.phase_algorithm)},
                     {"phase_init", c.phase_init == PhaseInit::Zero ? "zero" : "random"},
                     {"outer_tol", c.outer_tol},
                     {"outer_max_iter", c.outer_max_iter},
                     {"phase_tol", c.phase_tol},
                     {"phase_max_iter", c.phase_max_iter},
                     {"armijo_tau", c.line_search.armijo_tau},
                     {"initial_step", c.line_search.initial_step},
                     {"shrink_factor", c.line_search.shrink_factor},
                     {"max_backtracks", c.line_search.max_backtracks},
                     {"bisection_power_tol", c.bisection.power_tol},
                     {"bisection_bracket_tol", c.bisection.bracket_tol}};
}

/// Budgets are not read here; they come from the scenario.
inline void from_json(const nlohmann::json& j, SolverConfig& c) {
  if (!j.is_object()) throw ConfigError("solver config must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) throw ConfigError("unknown solver field: " + it.key());
  if (j.contains("phase_algorithm")) c.phase_algorithm = phase_algorithm_from_string(j.at("phase_algorithm"));
  if (j.contains("phase_init")) {
    const std::string s = j.at("phase_init");
    if (s == "zero")
      c.phase_init = PhaseInit::Zero;
    else if (s == "random")
      c.phase_init = PhaseInit::Random;
    else
      throw ConfigError("unknown phase_init: " + s);
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("outer_tol", c.outer_tol);
  get("outer_max_iter", c.outer_max_iter);
  get("phase_tol", c.phase_tol);
  get("phase_max_iter", c.phase_max_iter);
  get("armijo_tau", c.line_search.armijo_tau);
  get("initial_step", c.line_search.initial_step);
  get("shrink_factor", c.line_search.shrink_factor);
  get("max_backtracks", c.line_search.max_backtracks);
  get("bisection_power_tol", c.bisection.power_tol);
  get("bisection_bracket_tol", c.bisection.bracket_tol);
}

/// `include_timing` false drops wall-clock fields so that reports are reproducible byte for byte.
inline nlohmann::json report_to_json(const SolverReport& r, bool include_timing = true) {
  nlohmann::json j;
  j["termination"] = to_string(r.termination);
  if (!r.error_message.empty()) j["error"] = r.error_message;
  j["outer_iterations"] = r.outer_iterations;
  j["phase_iterations_total"] = r.phase_iterations_total;
  j["phase_stalls"] = r.phase_stalls;
  j["sum_rate_trace"] = r.sum_rate_trace;
  j["ul_rate_trace"] = r.ul_rate_trace;
  j["dl_rate_trace"] = r.dl_rate_trace;
  j["final"] = {{"sum_rate_bps_hz", r.rates.sum_rate},
                {"ul_rate_bps_hz", r.rates.ul_sum},
                {"dl_rate_bps_hz", r.rates.dl_sum},
                {"ul_user_rates", r.rates.ul},
                {"dl_user_rates", r.rates.dl}};
  j["kkt"] = {{"max_power_excess", r.max_power_excess},
              {"max_slackness", r.max_slackness},
              {"max_surrogate_gap", r.max_surrogate_gap}};
  std::vector<double> theta(r.phase.theta().data(), r.phase.theta().data() + r.phase.theta().size());
  j["theta"] = theta;
  if (include_timing)
    j["timings_ms"] = {{"decoders", r.timings.decoders_ms},
                       {"precoders", r.timings.precoders_ms},
                       {"phase", r.timings.phase_ms},
                       {"evaluate", r.timings.evaluate_ms},
                       {"total", r.timings.total_ms}};
  return j;
}

}  // namespace fdris
