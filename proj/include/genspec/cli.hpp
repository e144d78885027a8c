#pragma once

// Command-line front end: parameter loading and one subcommand per data set.
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genspec/csv.hpp"
#include "genspec/dynamics.hpp"
#include "genspec/equilibria.hpp"
#include "genspec/lyapunov.hpp"
#include "genspec/params_io.hpp"
#include "genspec/stability.hpp"
#include "genspec/sweep.hpp"

namespace genspec::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  bool defaults = false;
  std::optional<double> alpha, alpha_s;
  std::string out;
  unsigned threads = default_threads();
};

// Defaults, then the config file, then --set in order, then --alpha/--alpha-s.
inline Params resolve_params(const CommonOptions& o) {
  std::optional<Params> base;
  if (o.defaults) base = default_params();
  Params p = base.value_or(Params{});
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw UsageError("cannot open config file '" + o.config + "'");
    p = read_params(in, base);
  } else if (!base && o.sets.empty()) {
    throw UsageError("no parameters given: use --defaults-eq7, --config or --set");
  }
  for (const auto& s : o.sets) apply_assignment(p, s);
  if (o.alpha) p.alpha = *o.alpha;
  if (o.alpha_s) p.alpha_s = *o.alpha_s;
  validate(p);
  return p;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UsageError("cannot write output file '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

inline void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "parameter file (key=value per line)");
  sub->add_option("--set", o.sets, "override one parameter, key=value (repeatable)")
      ->allow_extra_args(false);
  sub->add_flag("--defaults-eq7", o.defaults, "start from the reference parameter set");
  sub->add_option("--alpha", o.alpha, "generalist infection rate");
  sub->add_option("--alpha-s", o.alpha_s, "specialist infection rate");
  sub->add_option("--out", o.out, "output CSV path (stdout when omitted)");
  sub->add_option("--threads", o.threads, "worker thread cap")->check(CLI::PositiveNumber);
}

inline void add_integrator(CLI::App* sub, IntegratorConfig& c) {
  sub->add_option("--t-end", c.t_end, "integration horizon")->capture_default_str();
  sub->add_option("--rtol", c.rel_tol, "relative tolerance")->capture_default_str();
  sub->add_option("--atol", c.abs_tol, "absolute tolerance")->capture_default_str();
  sub->add_option("--max-step", c.max_step, "largest step")->capture_default_str();
  sub->add_option("--transient", c.transient_fraction, "discarded fraction before classification")
      ->capture_default_str();
}

inline void add_lle(CLI::App* sub, LleConfig& c) {
  sub->add_option("--lle-transient", c.transient, "time discarded before accumulating")
      ->capture_default_str();
  sub->add_option("--lle-time", c.accumulation, "accumulation time")->capture_default_str();
  sub->add_option("--renorm", c.renorm_interval, "renormalization interval")
      ->capture_default_str();
}

inline void add_grid(CLI::App* sub, Grid2D& g) {
  sub->add_option("--alpha-from", g.alpha_lo)->capture_default_str();
  sub->add_option("--alpha-to", g.alpha_hi)->capture_default_str();
  sub->add_option("--alpha-n", g.n_alpha)->capture_default_str();
  sub->add_option("--alpha-s-from", g.alpha_s_lo)->capture_default_str();
  sub->add_option("--alpha-s-to", g.alpha_s_hi)->capture_default_str();
  sub->add_option("--alpha-s-n", g.n_alpha_s)->capture_default_str();
}

inline void header_block(CsvWriter& w, std::string_view command, const Params& p) {
  w.meta("command=" + std::string(command));
  w.params(p);
  for (const auto& msg : warnings(p)) w.meta("warning: " + msg);
}

inline std::vector<std::string> state_cells(const State& s) {
  std::vector<std::string> out;
  for (int i = 0; i < kDim; ++i) out.push_back(csv_number(s[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_equilibria(const CommonOptions& o, const std::string& report_path) {
  const Params p = resolve_params(o);
  const auto eqs = all_equilibria(p);
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "equilibria", p);
  for (const auto& [a, b] : collisions(eqs))
    w.meta("collision " + std::string(name(a)) + " " + std::string(name(b)));
  std::vector<std::string> cols = {"name"};
  for (auto v : kVarNames) cols.emplace_back(v);
  cols.insert(cols.end(), {"feasible", "residual"});
  w.header(cols);
  for (const auto& e : eqs) {
    std::vector<std::string> row = {std::string(e.name())};
    for (auto& c : state_cells(e.state)) row.push_back(c);
    row.push_back(e.feasible ? "1" : "0");
    row.push_back(std::isfinite(e.residual) ? format_double(e.residual) : "inf");
    w.row(row);
  }
  if (report_path.empty()) return;
  Output rep(report_path);
  CsvWriter r(rep.stream());
  header_block(r, "equilibria-stability", p);
  std::vector<std::string> rcols = {"name"};
  for (int i = 1; i <= kDim; ++i) rcols.push_back("re" + std::to_string(i));
  for (int i = 1; i <= kDim; ++i) rcols.push_back("im" + std::to_string(i));
  rcols.push_back("classification");
  r.header(rcols);
  for (const auto& rep_row : classify_all(p, eqs)) {
    std::vector<std::string> row = {std::string(name(rep_row.id))};
    for (const auto& l : rep_row.eigenvalues) row.push_back(format_double(l.real()));
    for (const auto& l : rep_row.eigenvalues) row.push_back(format_double(l.imag()));
    row.emplace_back(to_string(rep_row.classification));
    r.row(row);
  }
}

struct SimulateOptions {
  double zs0 = 0.5, z0 = 0.5;
  double dt = 0.1;
  std::string classify_out;
};

inline void cmd_simulate(const CommonOptions& o, IntegratorConfig cfg, const SimulateOptions& s) {
  const Params p = resolve_params(o);
  cfg.sample_dt = s.dt;
  cfg.check();
  const State s0 = reference_initial_state(p, s.zs0, s.z0);
  const auto tr = integrate(p, s0, cfg);
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "simulate", p);
  w.meta("zs0=" + format_double(s.zs0) + " z0=" + format_double(s.z0));
  w.meta("steps accepted=" + std::to_string(tr.stats.accepted) +
         " rejected=" + std::to_string(tr.stats.rejected));
  std::vector<std::string> cols = {"t"};
  for (auto v : kVarNames) cols.emplace_back(v);
  w.header(cols);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    std::vector<std::string> row = {format_double(tr.t[i])};
    for (auto& c : state_cells(tr.states[i])) row.push_back(c);
    w.row(row);
  }
  if (s.classify_out.empty()) return;
  const auto c = classify_attractor(p, s0, cfg);
  Output cout_(s.classify_out);
  CsvWriter cw(cout_.stream());
  header_block(cw, "classify", p);
  cw.header({"alpha", "alpha_s", "zs0", "z0", "kind", "target", "metrics"});
  cw.row({format_double(p.alpha), format_double(p.alpha_s), format_double(s.zs0),
          format_double(s.z0), std::string(to_string(c.kind)), c.target,
          format_metrics(c.metrics)});
}

struct Sweep1DOptions {
  std::string axis = "alpha";
  double from = 0.1, to = 3.0;
  int n = 100;
};

inline void cmd_sweep1d(const CommonOptions& o, SweepConfig cfg, const Sweep1DOptions& s) {
  const Params p = resolve_params(o);
  const Rate axis = s.axis == "alpha" ? Rate::alpha : Rate::alpha_s;
  cfg.threads = o.threads;
  cfg.integ.check();
  const auto sw = bifurcation_sweep_1d(p, axis, s.from, s.to, s.n, cfg);
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "sweep1d", p);
  w.meta("axis=" + s.axis);
  for (const auto& c : sw.crossings) w.meta("crossing " + c.label + " " + format_double(c.value));
  for (const auto& smp : sw.samples) {
    if (!smp.error.empty()) w.meta("error " + format_double(smp.value) + " " + smp.error);
    if (smp.attractor && smp.attractor->kind != AttractorKind::periodic &&
        smp.attractor->kind != AttractorKind::equilibrium)
      w.meta("attractor " + format_double(smp.value) + " " + smp.attractor->key());
  }
  w.header({s.axis, "equilibrium", "norm", "stable", "po_max", "po_min"});
  for (const auto& smp : sw.samples) {
    const std::string v = format_double(smp.value);
    for (const auto& e : smp.equilibria)
      w.row({v, std::string(name(e.id)), format_double(e.norm),
             e.stability == Stability::stable ? "1" : "0", "", ""});
    if (smp.attractor && smp.attractor->kind == AttractorKind::periodic)
      w.row({v, smp.attractor->key(), "", "1", format_double(smp.attractor->metrics.max_norm),
             format_double(smp.attractor->metrics.min_norm)});
  }
}

inline void cmd_stability_map(const CommonOptions& o, const Grid2D& g, BasinConfig cfg) {
  const Params p = resolve_params(o);
  const auto cells = stability_map(p, g, cfg, o.threads);
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "stability-map", p);
  w.meta("basin_n=" + std::to_string(cfg.n) + " t_end=" + format_double(cfg.integ.t_end));
  for (const auto& c : cells)
    for (const auto& r : c.basin.runs)
      if (!r.attractor.metrics.diagnostics.empty())
        w.meta("failure alpha=" + format_double(c.alpha) + " alpha_s=" +
               format_double(c.alpha_s) + ": " + r.attractor.metrics.diagnostics);
  w.header({"alpha", "alpha_s", "attractor", "probability"});
  for (const auto& c : cells)
    for (const auto& [key, prob] : c.basin.probability)
      w.row({format_double(c.alpha), format_double(c.alpha_s), key, format_double(prob)});
}

inline void cmd_lle_map(const CommonOptions& o, const Grid2D& g, const LleConfig& cfg,
                        double zs0, double z0) {
  const Params p = resolve_params(o);
  const auto cells = lle_map(p, g, zs0, z0, cfg, o.threads);
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "lle-map", p);
  for (const auto& c : cells)
    if (!c.error.empty())
      w.meta("failure alpha=" + format_double(c.alpha) + " alpha_s=" + format_double(c.alpha_s) +
             ": " + c.error);
  w.header({"alpha", "alpha_s", "lle", "converged"});
  for (const auto& c : cells)
    w.row({format_double(c.alpha), format_double(c.alpha_s), csv_number(c.lle),
           c.converged ? "1" : "0"});
}

struct CurvesOptions {
  double from = 0.05, to = 3.0;
  int n = 60;
};

inline void cmd_curves(const CommonOptions& o, const CurvesOptions& s) {
  const Params p = resolve_params(o);
  if (s.n < 2 || !(s.to > s.from)) throw UsageError("curves needs --n >= 2 and --from < --to");
  Output out(o.out);
  CsvWriter w(out.stream());
  header_block(w, "curves", p);
  const auto grid = linspace(s.from, s.to, s.n);
  for (const auto& c : kAnalyticCurves) {
    if (c.depends_on_other) continue;
    const auto v = curve_value(c.label, p);
    w.meta(std::string(to_string(c.label)) + " " + std::string(to_string(c.solves_for)) + "=" +
           (v ? format_double(*v) : "undefined"));
  }
  w.header({"label", "alpha", "alpha_s"});
  for (const auto& c : kAnalyticCurves) {
    const std::string label(to_string(c.label));
    if (!c.depends_on_other) {
      const auto v = curve_value(c.label, p);
      if (!v) continue;
      for (double x : grid)
        c.solves_for == Rate::alpha ? w.row({label, format_double(*v), format_double(x)})
                                    : w.row({label, format_double(x), format_double(*v)});
      continue;
    }
    for (double a : grid) {
      const auto v = curve_alpha_s(c.label, p, a);
      if (v && *v > 0.0) w.row({label, format_double(a), format_double(*v)});
    }
  }
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Generalist/specialist virus dynamics: equilibria, bifurcations, attractors"};
  app.require_subcommand(1);
  CommonOptions common;
  std::function<void()> action;

  auto* eq = app.add_subcommand("equilibria", "all nine equilibria with residuals");
  add_common(eq, common);
  std::string report;
  eq->add_option("--stability-out", report, "also write the eigenvalue report here");
  eq->callback([&] { action = [&] { cmd_equilibria(common, report); }; });

  auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
  add_common(sim, common);
  IntegratorConfig icfg;
  SimulateOptions sopt;
  add_integrator(sim, icfg);
  sim->add_option("--zs0", sopt.zs0, "initial specialist load")->capture_default_str();
  sim->add_option("--z0", sopt.z0, "initial generalist load")->capture_default_str();
  sim->add_option("--dt", sopt.dt, "sample spacing")->capture_default_str();
  sim->add_option("--classify-out", sopt.classify_out, "also classify the attractor");
  sim->callback([&] { action = [&] { cmd_simulate(common, icfg, sopt); }; });

  auto* sw = app.add_subcommand("sweep1d", "one-parameter bifurcation table");
  add_common(sw, common);
  SweepConfig swcfg;
  Sweep1DOptions swopt;
  add_integrator(sw, swcfg.integ);
  add_lle(sw, swcfg.lle);
  sw->add_option("--axis", swopt.axis, "rate to vary")
      ->check(CLI::IsMember({"alpha", "alpha_s"}))
      ->capture_default_str();
  sw->add_option("--from", swopt.from)->capture_default_str();
  sw->add_option("--to", swopt.to)->capture_default_str();
  sw->add_option("--n", swopt.n)->capture_default_str();
  sw->callback([&] { action = [&] { cmd_sweep1d(common, swcfg, swopt); }; });

  Grid2D grid{0.1, 3.0, 10, 0.1, 3.0, 10};
  auto* sm = app.add_subcommand("stability-map", "basin probabilities over the rate plane");
  add_common(sm, common);
  add_grid(sm, grid);
  BasinConfig bcfg;
  add_integrator(sm, bcfg.integ);
  add_lle(sm, bcfg.lle);
  sm->add_option("--basin-n", bcfg.n, "initial loads per axis")->capture_default_str();
  sm->callback([&] {
    action = [&] {
      grid.check();
      bcfg.check();
      cmd_stability_map(common, grid, bcfg);
    };
  });

  auto* lm = app.add_subcommand("lle-map", "largest Lyapunov exponent over the rate plane");
  add_common(lm, common);
  add_grid(lm, grid);
  LleConfig lcfg;
  add_lle(lm, lcfg);
  double lzs0 = 0.5, lz0 = 0.5;
  lm->add_option("--zs0", lzs0)->capture_default_str();
  lm->add_option("--z0", lz0)->capture_default_str();
  lm->callback([&] {
    action = [&] {
      grid.check();
      lcfg.check();
      cmd_lle_map(common, grid, lcfg, lzs0, lz0);
    };
  });

  auto* cv = app.add_subcommand("curves", "analytic bifurcation curves");
  add_common(cv, common);
  CurvesOptions copt;
  cv->add_option("--from", copt.from, "sampling range start")->capture_default_str();
  cv->add_option("--to", copt.to, "sampling range end")->capture_default_str();
  cv->add_option("--n", copt.n, "samples per curve")->capture_default_str();
  cv->callback([&] { action = [&] { cmd_curves(common, copt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    action();
    return kOk;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace genspec::cli
