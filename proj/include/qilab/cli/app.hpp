#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qilab/core/decompose.hpp"
#include "qilab/emission/model.hpp"
#include "qilab/emission/optimize.hpp"
#include "qilab/emission/sweeps.hpp"
#include "qilab/error.hpp"
#include "qilab/io/table.hpp"
#include "qilab/oracle/random.hpp"
#include "qilab/oracle/verify.hpp"
#include "qilab/pinem/ladder.hpp"
#include "qilab/pinem/spectrum.hpp"
#include "qilab/util/grid.hpp"

namespace qilab::cli {

using json = nlohmann::ordered_json;

enum class Kind { real, integer, text, real_list };

/// One command parameter: the flag is "--" + name, the config key is name.
struct ParamSpec {
  std::string name;
  Kind kind;
  json fallback;
  std::string help;
};

/// Fully resolved parameter values (defaults < config file < flags).
class Params {
public:
  explicit Params(json values) : values_(std::move(values)) {}

  double real(const std::string& name) const { return values_.at(name).get<double>(); }
  std::int64_t integer(const std::string& name) const { return values_.at(name).get<std::int64_t>(); }
  std::string text(const std::string& name) const { return values_.at(name).get<std::string>(); }
  std::vector<double> list(const std::string& name) const { return values_.at(name).get<std::vector<double>>(); }
  const json& values() const { return values_; }

  std::size_t count(const std::string& name, std::int64_t min = 1) const {
    const auto v = integer(name);
    if (v < min) throw ValidationError(name + ": must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

private:
  json values_;
};

namespace detail {

inline double parse_real(const std::string& field, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError(field + ": expected a number, got '" + s + "'");
  if (!std::isfinite(v)) throw ValidationError(field + ": must be finite");
  return v;
}

inline std::int64_t parse_integer(const std::string& field, const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError(field + ": expected an integer, got '" + s + "'");
  return v;
}

inline json from_flag(const ParamSpec& spec, const std::string& s) {
  switch (spec.kind) {
  case Kind::real: return parse_real(spec.name, s);
  case Kind::integer: return parse_integer(spec.name, s);
  case Kind::text: return s;
  case Kind::real_list: {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(spec.name, item));
    if (out.empty()) throw ValidationError(spec.name + ": expected a comma-separated list of numbers");
    return out;
  }
  }
  throw InvariantError("unknown parameter kind");
}

inline json from_config(const ParamSpec& spec, const json& v) {
  auto real = [&](const json& x) {
    if (!x.is_number()) throw ValidationError(spec.name + ": expected a number in config");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw ValidationError(spec.name + ": must be finite");
    return d;
  };
  switch (spec.kind) {
  case Kind::real: return real(v);
  case Kind::integer:
    if (!v.is_number_integer()) throw ValidationError(spec.name + ": expected an integer in config");
    return v.get<std::int64_t>();
  case Kind::text:
    if (!v.is_string()) throw ValidationError(spec.name + ": expected a string in config");
    return v;
  case Kind::real_list: {
    std::vector<double> out;
    if (v.is_array())
      for (const auto& x : v) out.push_back(real(x));
    else
      out.push_back(real(v));
    if (out.empty()) throw ValidationError(spec.name + ": list must not be empty");
    return out;
  }
  }
  throw InvariantError("unknown parameter kind");
}

inline std::string default_text(const json& v) {
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x.dump();
    return s;
  }
  return v.is_string() ? v.get<std::string>() : v.dump();
}

inline const char* type_label(Kind kind) {
  switch (kind) {
  case Kind::real: return "REAL";
  case Kind::integer: return "INT";
  case Kind::text: return "TEXT";
  case Kind::real_list: return "REAL,...";
  }
  return "";
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace detail

/// Output target for a command: header, rows, and the seed it ran with.
struct Context {
  io::RowWriter& writer;
  io::Provenance provenance;
  std::uint64_t seed;

  void begin(std::vector<std::string> columns) { writer.begin(provenance, std::move(columns)); }
};

struct Command {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::function<int(const Params&, Context&)> run;
};

// ---- parameter blocks ------------------------------------------------------

inline std::vector<ParamSpec> pinem_block() {
  return {{"g-mod", Kind::real, 0.5, "modulation coupling |G_mod|"},
          {"g-mod-arg", Kind::real, 0.0, "arg G_mod [rad]"},
          {"phi-mod", Kind::real, 0.0, "global comb phase phi_mod [rad]"},
          {"n-max", Kind::integer, 0, "comb half-width (0 = auto)"},
          {"window", Kind::integer, 0, "output label half-width (0 = auto)"}};
}

inline std::vector<ParamSpec> beam_block() {
  return {{"ek-ev", Kind::real, 30e3, "electron kinetic energy [eV]"},
          {"b-abs", Kind::real, 0.99, "bunching factor |b|"},
          {"psi-b", Kind::real, 0.0, "bunching phase Psi_b [rad]"},
          {"omega-mod", Kind::real, 3e15, "modulation frequency [rad/s], used with policy fixed"},
          {"omega-mod-policy", Kind::text, "track", "track | fixed | joint"}};
}

inline std::vector<ParamSpec> atom_block() {
  return {{"omega-a", Kind::real, 3e15, "emitter transition frequency [rad/s]"},
          {"dipole", Kind::real, 4.33e-29, "transition dipole |d| [C m]"},
          {"z-a-nm", Kind::real, 0.0, "emitter position along the beam [nm]"},
          {"theta-a", Kind::real, std::numbers::pi / 2, "Bloch polar angle [rad]"},
          {"phi-a", Kind::real, std::numbers::pi / 2, "Bloch azimuth [rad]"}};
}

inline std::vector<ParamSpec> cavity_block() {
  return {{"omega-cav", Kind::real, 0.0, "cavity frequency [rad/s] (0 = omega-a)"},
          {"volume", Kind::real, 0.0, "mode volume [m^3] (0 = L (lambda/2)^2)"}};
}

inline std::vector<ParamSpec> scan_block() {
  return {{"l-min-nm", Kind::real, 0.1, "shortest scanned length [nm]"},
          {"l-max-nm", Kind::real, 1e8, "longest scanned length [nm]"},
          {"points", Kind::integer, 2000, "log-spaced scan points"},
          {"rel-tol", Kind::real, 1e-9, "golden-section relative length tolerance"}};
}

template <class... Blocks>
std::vector<ParamSpec> concat(Blocks&&... blocks) {
  std::vector<ParamSpec> out;
  (out.insert(out.end(), blocks.begin(), blocks.end()), ...);
  return out;
}

// ---- conversions at the unit boundary --------------------------------------

inline emission::OmegaModPolicy parse_policy(const std::string& s) {
  if (s == "track") return emission::OmegaModPolicy::track_cavity;
  if (s == "fixed") return emission::OmegaModPolicy::fixed;
  if (s == "joint") return emission::OmegaModPolicy::joint;
  throw ValidationError("omega-mod-policy: expected track, fixed or joint, got '" + s + "'");
}

inline pinem::ModulationParams modulation(const Params& p) {
  const auto n_max = p.integer("n-max");
  if (n_max < 0) throw ValidationError("n-max: must be >= 0");
  pinem::ModulationParams m{std::polar(p.real("g-mod"), p.real("g-mod-arg")), p.real("phi-mod"),
                            static_cast<int>(n_max)};
  if (p.real("g-mod") < 0.0) throw ValidationError("g-mod: must be >= 0");
  m.validate();
  return m;
}

inline std::optional<LabelWindow> output_window(const Params& p) {
  const auto w = p.integer("window");
  if (w < 0) throw ValidationError("window: must be >= 0");
  if (w == 0) return std::nullopt;
  return LabelWindow::symmetric(static_cast<int>(w));
}

inline emission::FreeElectronParams free_electron(const Params& p, double omega_cav, double kinetic_energy_ev) {
  emission::FreeElectronParams fe{kinetic_energy_ev, p.real("omega-mod"), p.real("b-abs"), p.real("psi-b")};
  if (parse_policy(p.text("omega-mod-policy")) == emission::OmegaModPolicy::track_cavity) fe.omega_mod = omega_cav;
  fe.validate();
  return fe;
}

inline emission::BoundElectronParams bound_electron(const Params& p, double omega_a) {
  emission::BoundElectronParams be{omega_a, p.real("dipole"), p.real("z-a-nm") * 1e-9, p.real("theta-a"),
                                   p.real("phi-a")};
  be.validate();
  return be;
}

inline emission::CavityTemplate cavity_template(const Params& p, double omega_a) {
  const double w = p.real("omega-cav");
  const double v = p.real("volume");
  if (w < 0.0) throw ValidationError("omega-cav: must be >= 0");
  if (v < 0.0) throw ValidationError("volume: must be >= 0");
  emission::CavityTemplate t{w == 0.0 ? omega_a : w, std::nullopt};
  if (v > 0.0) t.mode_volume = v;
  return t;
}

inline emission::LengthScan length_scan(const Params& p) {
  emission::LengthScan s;
  s.l_min = p.real("l-min-nm") * 1e-9;
  s.l_max = p.real("l-max-nm") * 1e-9;
  s.points = p.count("points", 3);
  s.rel_tol = p.real("rel-tol");
  s.validate();
  return s;
}

inline void reject_joint(const Params& p, const std::string& command) {
  if (parse_policy(p.text("omega-mod-policy")) == emission::OmegaModPolicy::joint)
    throw ValidationError("omega-mod-policy: joint is only available for se-lopt and se-bunching-map, not " + command);
}

inline double fom_cell(const emission::EmissionRates& r) { return r.fom.value_or(std::nan("")); }

/// Points 2 pi k / n, k = 0..n-1.
inline std::vector<double> periodic_grid(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return out;
}

// ---- commands --------------------------------------------------------------

inline int cmd_pinem_spectrum(const Params& p, Context& ctx) {
  const auto mod = modulation(p);
  const pinem::InteractionCoupling g(std::polar(p.real("g"), p.real("g-arg")));
  const auto spec = pinem::spectrum(mod, g, output_window(p));
  ctx.begin({"N", "p_with_qi", "p_without_qi", "qi_term"});
  for (int n = spec.window.lo; n <= spec.window.hi; ++n)
    ctx.writer.row({std::int64_t{n}, spec.with(n), spec.without(n), spec.qi_term(n)});
  return 0;
}

inline int cmd_pinem_sweep(const Params& p, Context& ctx) {
  const auto mod = modulation(p);
  const double g_min = p.real("g-min");
  const double g_max = p.real("g-max");
  if (g_min < 0.0 || g_max < g_min) throw ValidationError("g-min/g-max: need 0 <= g-min <= g-max");
  std::vector<complex> couplings;
  for (double g : linspace(g_min, g_max, p.count("g-steps"))) couplings.push_back(std::polar(g, p.real("g-arg")));
  ctx.begin({"g_abs", "g_arg", "N", "p_with_qi", "p_without_qi", "qi_term"});
  pinem::coupling_sweep(mod, couplings, output_window(p), [&](const pinem::SweepRow& r) {
    ctx.writer.row({r.g_abs, r.g_arg, std::int64_t{r.n}, r.with_qi, r.without_qi, r.with_qi - r.without_qi});
  });
  return 0;
}

inline int cmd_se_rates(const Params& p, Context& ctx) {
  reject_joint(p, "se-rates");
  const auto& k = emission::kCodata2018;
  const auto be = bound_electron(p, p.real("omega-a"));
  const auto tmpl = cavity_template(p, be.omega_a);
  const auto fe = free_electron(p, tmpl.omega_cav, p.real("ek-ev"));
  const auto cav = tmpl.at(p.real("l-nm") * 1e-9, k);
  cav.validate();
  const auto r = emission::rates(k, fe, be, cav);
  const auto geo = emission::rate_geometry(k, fe, be, cav);
  ctx.begin({"L_m", "tau_s", "beta0", "xi_rad", "gamma_a_per_s", "gamma_e_per_s", "gamma_ae_per_s", "total_per_s",
             "fom"});
  ctx.writer.row({cav.length, geo.tau, geo.beta0, geo.xi, r.gamma_a, r.gamma_e, r.gamma_ae, r.total, fom_cell(r)});
  return 0;
}

inline int cmd_se_sweep(const Params& p, Context& ctx) {
  reject_joint(p, "se-sweep");
  const auto& k = emission::kCodata2018;
  const auto be = bound_electron(p, p.real("omega-a"));
  const auto tmpl = cavity_template(p, be.omega_a);
  const auto fe = free_electron(p, tmpl.omega_cav, p.real("ek-ev"));
  const double l_min = p.real("l-min-nm") * 1e-9;
  const double l_max = p.real("l-max-nm") * 1e-9;
  if (!(l_min > 0.0 && l_max >= l_min)) throw ValidationError("l-min-nm/l-max-nm: need 0 < l-min-nm <= l-max-nm");
  const double w_min = p.real("omega-cav-min");
  const double w_max = p.real("omega-cav-max");
  if (!(w_min > 0.0 && w_max >= w_min))
    throw ValidationError("omega-cav-min/omega-cav-max: need 0 < omega-cav-min <= omega-cav-max");
  const auto cells = emission::resonance_sweep(k, fe, be, tmpl, logspace(l_min, l_max, p.count("l-points")),
                                               linspace(w_min, w_max, p.count("omega-cav-points")),
                                               parse_policy(p.text("omega-mod-policy")));
  ctx.begin({"L_m", "omega_cav_rad_per_s", "gamma_a_per_s", "gamma_e_per_s", "gamma_ae_per_s", "total_per_s", "fom"});
  for (const auto& c : cells)
    ctx.writer.row({c.length, c.omega_cav, c.rates.gamma_a, c.rates.gamma_e, c.rates.gamma_ae, c.rates.total,
                    fom_cell(c.rates)});
  return 0;
}

inline int cmd_se_lopt(const Params& p, Context& ctx) {
  const auto& k = emission::kCodata2018;
  const auto scan = length_scan(p);
  const auto policy = parse_policy(p.text("omega-mod-policy"));
  const auto energies = p.list("ek-ev");
  const auto omegas = p.list("omega-a");
  std::vector<emission::LengthOptimum> cells(energies.size() * omegas.size());
  // validate every cell before the (parallel) optimization starts
  std::vector<std::tuple<emission::FreeElectronParams, emission::BoundElectronParams, emission::CavityTemplate>> setup;
  for (double ek : energies)
    for (double wa : omegas) {
      const auto be = bound_electron(p, wa);
      const auto tmpl = cavity_template(p, wa);
      setup.emplace_back(free_electron(p, tmpl.omega_cav, ek), be, tmpl);
    }
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto& [fe, be, tmpl] = setup[i];
    cells[i] = emission::optimize_length(k, fe, be, tmpl, scan, policy);
  });
  ctx.begin({"ek_ev", "omega_a_rad_per_s", "omega_cav_rad_per_s", "L_opt_m", "gamma_max", "omega_mod_rad_per_s",
             "degenerate"});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& [fe, be, tmpl] = setup[i];
    ctx.writer.row({fe.kinetic_energy_ev, be.omega_a, tmpl.omega_cav, cells[i].l_opt, cells[i].gamma_max,
                    cells[i].omega_mod, std::int64_t{cells[i].degenerate}});
  }
  return 0;
}

inline int cmd_se_bloch_map(const Params& p, Context& ctx) {
  reject_joint(p, "se-bloch-map");
  const auto& k = emission::kCodata2018;
  const auto be = bound_electron(p, p.real("omega-a"));
  const auto tmpl = cavity_template(p, be.omega_a);
  const auto fe = free_electron(p, tmpl.omega_cav, p.real("ek-ev"));
  const auto cav = tmpl.at(p.real("l-nm") * 1e-9, k);
  cav.validate();
  const auto cells = emission::bloch_map(k, fe, be, cav, linspace(0.0, std::numbers::pi, p.count("theta-points")),
                                         periodic_grid(p.count("phi-points")));
  ctx.begin({"theta_a_rad", "phi_a_rad", "gamma_a_per_s", "gamma_e_per_s", "gamma_ae_per_s", "fom", "abs_fom"});
  for (const auto& c : cells)
    ctx.writer.row({c.theta_a, c.phi_a, c.rates.gamma_a, c.rates.gamma_e, c.rates.gamma_ae, fom_cell(c.rates),
                    c.fom_abs()});
  return 0;
}

inline int cmd_se_bunching_map(const Params& p, Context& ctx) {
  const auto& k = emission::kCodata2018;
  const auto scan = length_scan(p);
  const auto policy = parse_policy(p.text("omega-mod-policy"));
  const auto be = bound_electron(p, p.real("omega-a"));
  const auto tmpl = cavity_template(p, be.omega_a);
  const double b_min = p.real("b-min");
  const double b_max = p.real("b-max");
  if (!(b_min >= 0.0 && b_max <= 1.0 && b_min <= b_max)) throw ValidationError("b-min/b-max: need 0 <= b-min <= b-max <= 1");
  const double ek = p.real("ek-ev");
  if (!(ek > 0.0)) throw ValidationError("ek-ev: must be > 0");
  const auto cells = emission::bunching_sensitivity(k, be, tmpl, linspace(b_min, b_max, p.count("b-points")),
                                                    periodic_grid(p.count("psi-points")), ek, scan, policy);
  ctx.begin({"b_abs", "psi_b_rad", "L_opt_m", "gamma_max", "omega_mod_rad_per_s", "degenerate"});
  for (const auto& c : cells)
    ctx.writer.row({c.bunching_abs, c.bunching_phase, c.optimum.l_opt, c.optimum.gamma_max, c.optimum.omega_mod,
                    std::int64_t{c.optimum.degenerate}});
  return 0;
}

inline int cmd_qi_decompose(const Params& p, Context& ctx) {
  const std::string preset = p.text("preset");
  auto emit = [&](const ProductState& state, const ScatteringOperator& op, std::size_t system, LabelWindow labels) {
    ctx.begin({"label", "subset", "order", "term", "direct"});
    for (const auto& [label, terms] : marginal_spectrum(state, op, system, labels)) {
      auto sel = FinalSelector::all_free(state.size());
      sel.fix(system, label);
      const double direct = direct_probability(state, op, sel);
      for (Subset d = 0; d < terms.subset_count(); ++d) {
        auto name = subset_to_string(d);
        std::replace(name.begin(), name.end(), ',', ';'); // keep the CSV cell intact
        ctx.writer.row({std::int64_t{label}, name, std::int64_t{std::popcount(d)}, terms[d], direct});
      }
    }
  };
  if (preset == "pinem") {
    const auto mod = modulation(p);
    const pinem::InteractionCoupling g(std::polar(p.real("g"), p.real("g-arg")));
    const auto comb = pinem::initial_amplitudes(mod);
    const int reach = pinem::recommended_half_width(std::abs(g.g), std::abs(mod.g_mod));
    const auto labels = output_window(p).value_or(LabelWindow::symmetric(reach));
    const int half = std::max({reach, comb.max_label(), -comb.min_label(), labels.hi, -labels.lo});
    const pinem::LadderShiftOperator op(g, LabelWindow::symmetric(half), {comb.min_label(), comb.max_label()});
    emit(ProductState{comb}, op, 0, labels);
    return 0;
  }
  if (preset == "random") {
    const auto n = p.count("systems");
    const auto dim = p.count("dim");
    if (n > 8) throw ValidationError("systems: at most 8 for the random preset");
    const auto system = static_cast<std::size_t>(p.integer("system"));
    if (p.integer("system") < 0 || system >= n) throw ValidationError("system: must index one of the systems");
    oracle::CounterRng rng(ctx.seed, 0);
    std::vector<SystemState> systems;
    for (std::size_t j = 0; j < n; ++j) systems.push_back(oracle::random_state(dim, rng));
    const auto op = oracle::random_unitary_operator(std::vector<std::size_t>(n, dim), rng);
    emit(ProductState(std::move(systems)), op, system, {0, static_cast<int>(dim) - 1});
    return 0;
  }
  throw ValidationError("preset: expected pinem or random, got '" + preset + "'");
}

inline int cmd_verify(const Params& p, Context& ctx) {
  const std::string which = p.text("suite");
  std::vector<oracle::SuiteResult> results;
  if (which == "all") {
    results = oracle::verify_all(ctx.seed);
  } else {
    const std::map<std::string, std::function<oracle::SuiteResult()>> suites = {
        {"bessel-accuracy", [] { return oracle::verify_bessel(); }},
        {"s-matrix-expm", [] { return oracle::verify_s_matrix(); }},
        {"direct-sum", [&] { return oracle::verify_direct_sum(ctx.seed); }},
        {"pinem-qi-core", [] { return oracle::verify_pinem_qi_core(); }},
        {"graf-composition", [&] { return oracle::verify_graf(ctx.seed); }},
        {"phase-scramble", [&] { return oracle::verify_phase_scramble(ctx.seed); }},
        {"perturbation", [&] { return oracle::verify_perturbation(ctx.seed); }}};
    const auto it = suites.find(which);
    if (it == suites.end()) throw ValidationError("suite: unknown suite '" + which + "'");
    results.push_back(it->second());
  }
  ctx.begin({"suite", "passed", "max_delta", "tolerance", "detail"});
  bool ok = true;
  for (const auto& r : results) {
    ctx.writer.row({r.name, std::int64_t{r.passed}, r.max_delta, r.tolerance, r.detail});
    ok = ok && r.passed;
  }
  return ok ? 0 : 3;
}

inline std::vector<Command> commands() {
  const std::vector<ParamSpec> coupling = {{"g", Kind::real, 0.7, "interaction coupling |G|"},
                                           {"g-arg", Kind::real, 0.0, "arg G [rad]"}};
  const std::vector<ParamSpec> length = {{"l-nm", Kind::real, 1000.0, "interaction length [nm]"}};
  return {
      {"pinem-spectrum", "gain/loss spectrum with and without QI", concat(pinem_block(), coupling),
       cmd_pinem_spectrum},
      {"pinem-sweep", "spectra over a range of |G|",
       concat(pinem_block(),
              std::vector<ParamSpec>{{"g-min", Kind::real, 0.0, "smallest |G|"},
                                     {"g-max", Kind::real, 1.5, "largest |G|"},
                                     {"g-steps", Kind::integer, 16, "number of |G| values"},
                                     {"g-arg", Kind::real, 0.0, "arg G [rad]"}}),
       cmd_pinem_sweep},
      {"se-rates", "emission rates at one configuration", concat(beam_block(), atom_block(), cavity_block(), length),
       cmd_se_rates},
      {"se-sweep", "rates over (L, omega_cav)",
       concat(beam_block(), atom_block(), cavity_block(),
              std::vector<ParamSpec>{{"l-min-nm", Kind::real, 1.0, "shortest length [nm]"},
                                     {"l-max-nm", Kind::real, 1e5, "longest length [nm]"},
                                     {"l-points", Kind::integer, 200, "log-spaced lengths"},
                                     {"omega-cav-min", Kind::real, 2.7e15, "lowest omega_cav [rad/s]"},
                                     {"omega-cav-max", Kind::real, 3.3e15, "highest omega_cav [rad/s]"},
                                     {"omega-cav-points", Kind::integer, 61, "linear omega_cav points"}}),
       cmd_se_sweep},
      {"se-lopt", "optimal length and gamma_max over (E_K, omega_a) lists",
       [&] {
         auto ps = concat(beam_block(), atom_block(), cavity_block(), scan_block());
         for (auto& s : ps) {
           if (s.name == "ek-ev") s = {"ek-ev", Kind::real_list, json::array({30e3}), "kinetic energies [eV], comma list"};
           if (s.name == "omega-a")
             s = {"omega-a", Kind::real_list, json::array({3e15}), "transition frequencies [rad/s], comma list"};
         }
         return ps;
       }(),
       cmd_se_lopt},
      {"se-bloch-map", "|fom| over the emitter Bloch sphere",
       concat(beam_block(), atom_block(), cavity_block(), length,
              std::vector<ParamSpec>{{"theta-points", Kind::integer, 37, "theta_a points over [0, pi]"},
                                     {"phi-points", Kind::integer, 72, "phi_a points over [0, 2 pi)"}}),
       cmd_se_bloch_map},
      {"se-bunching-map", "gamma_max over (|b|, Psi_b)",
       [&] {
         auto ps = concat(beam_block(), atom_block(), cavity_block(), scan_block(),
                          std::vector<ParamSpec>{{"b-min", Kind::real, 0.0, "smallest |b|"},
                                                 {"b-max", Kind::real, 0.99, "largest |b|"},
                                                 {"b-points", Kind::integer, 12, "|b| points"},
                                                 {"psi-points", Kind::integer, 8, "Psi_b points over [0, 2 pi)"}});
         std::erase_if(ps, [](const ParamSpec& s) { return s.name == "b-abs" || s.name == "psi-b"; });
         return ps;
       }(),
       cmd_se_bunching_map},
      {"qi-decompose", "QI terms per final label of one system",
       concat(std::vector<ParamSpec>{{"preset", Kind::text, "pinem", "pinem | random"},
                                     {"systems", Kind::integer, 3, "random preset: number of systems"},
                                     {"dim", Kind::integer, 3, "random preset: labels per system"},
                                     {"system", Kind::integer, 0, "random preset: system whose labels are listed"}},
              pinem_block(), coupling),
       cmd_qi_decompose},
      {"verify", "run the oracle suites",
       {{"suite", Kind::text, "all",
         "all | bessel-accuracy | s-matrix-expm | direct-sum | pinem-qi-core | graf-composition | phase-scramble | "
         "perturbation"}},
       cmd_verify},
  };
}

/// Runs one subcommand; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qi-lab: quantum interference in scattering and emission"};
  app.name(io::kToolName);
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);

  struct Bound {
    Command command;
    CLI::App* sub;
    std::map<std::string, std::string> flags;
    std::string config_path;
    std::string output;
    std::string format;
    std::uint64_t seed = 42;
  };
  auto cmds = commands();
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto& b = bound[i];
    b.command = cmds[i];
    b.sub = app.add_subcommand(b.command.name, b.command.description);
    b.sub->add_option("--config", b.config_path, "JSON file of parameters; flags override its values");
    b.sub->add_option("-o,--output", b.output, "output file (default stdout)");
    b.sub->add_option("--format", b.format, "csv | json (default csv)");
    b.sub->add_option("--seed", b.seed, "random seed (default 42)");
    for (const auto& spec : b.command.params)
      b.sub->add_option("--" + spec.name, b.flags[spec.name], spec.help + " [" + detail::default_text(spec.fallback) + "]")
          ->type_name(detail::type_label(spec.kind));
  }

  std::vector<std::string> argv_store{io::kToolName};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& b : bound) {
      if (!b.sub->parsed()) continue;
      json config = json::object();
      if (!b.config_path.empty()) {
        std::ifstream in(b.config_path);
        if (!in) throw ValidationError("config: cannot open '" + b.config_path + "'");
        try {
          config = json::parse(in);
        } catch (const json::exception& e) {
          throw ValidationError(std::string("config: invalid JSON: ") + e.what());
        }
        if (!config.is_object()) throw ValidationError("config: top level must be an object");
      }

      json resolved = json::object();
      for (const auto& [key, value] : config.items()) {
        if (key == "seed" || key == "format" || key == "output") continue;
        const bool known = std::any_of(b.command.params.begin(), b.command.params.end(),
                                       [&](const ParamSpec& s) { return s.name == key; });
        if (!known) throw ValidationError(key + ": unknown key for " + b.command.name);
      }
      for (const auto& spec : b.command.params) {
        if (b.sub->count("--" + spec.name) > 0)
          resolved[spec.name] = detail::from_flag(spec, b.flags[spec.name]);
        else if (config.contains(spec.name))
          resolved[spec.name] = detail::from_config(spec, config[spec.name]);
        else
          resolved[spec.name] = spec.fallback;
      }

      std::uint64_t seed = b.seed;
      if (b.sub->count("--seed") == 0 && config.contains("seed")) {
        if (!config["seed"].is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
        seed = config["seed"].get<std::uint64_t>();
      }
      std::string format = b.format;
      if (format.empty()) format = config.contains("format") && config["format"].is_string() ? config["format"].get<std::string>() : "csv";
      std::string output = b.output;
      if (output.empty() && config.contains("output")) {
        if (!config["output"].is_string()) throw ValidationError("output: expected a path string");
        output = config["output"].get<std::string>();
      }
      const auto fmt = io::parse_format(format);

      std::ofstream file;
      if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw ValidationError("output: cannot open '" + output + "' for writing");
      }
      std::ostream& sink = file.is_open() ? static_cast<std::ostream&>(file) : out;
      io::RowWriter writer(sink, fmt);
      Context ctx{writer, {b.command.name, resolved, seed, detail::utc_timestamp()}, seed};
      const int code = b.command.run(Params(resolved), ctx);
      writer.end();
      return code;
    }
    throw InvariantError("no subcommand selected");
  } catch (const ValidationError& e) {
    err << "error [validation]: " << e.what() << '\n';
    return 1;
  } catch (const NumericalGuardError& e) {
    err << "error [numerical guard]: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    err << "error [invariant]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error [internal]: " << e.what() << '\n';
    return 3;
  }
}

} // namespace qilab::cli
