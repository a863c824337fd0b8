#include "panelid/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <set>
#include <sstream>

namespace panelid {

using io::json;

namespace {

const std::set<std::string> kTopKeys = {"model", "dgp", "probabilities", "simulate", "identify",
                                         "functionals", "check", "tolerances", "output_dir", "description"};

HistoryOrder parse_order(const std::string& s) {
  if (s == "canonical") return HistoryOrder::Canonical;
  if (s == "graded") return HistoryOrder::Graded;
  if (s == "descending") return HistoryOrder::Descending;
  throw InputError("probability order must be canonical, graded or descending");
}

double positive(const json& j, const char* key, double fallback) {
  const double v = j.contains(key) ? j.at(key).get<double>() : fallback;
  if (!(v > 0)) throw InputError(std::string(key) + " must be positive");
  return v;
}

SearchBox box_from_json(const json& j, Eigen::Index k) {
  if (!j.is_array() || Eigen::Index(j.size()) != k) throw InputError("box needs one [lo, hi] pair per parameter");
  SearchBox b{VectorXd(k), VectorXd(k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& e = j[std::size_t(i)];
    if (!e.is_array() || e.size() != 2) throw InputError("box entries are [lo, hi] pairs");
    b.lo(i) = e[0].get<double>();
    b.hi(i) = e[1].get<double>();
    if (!(b.lo(i) < b.hi(i))) throw InputError("box entries need lo < hi");
  }
  return b;
}

FunctionalSpec functional_from_json(const json& j) {
  FunctionalSpec f;
  if (!j.contains("kind")) throw InputError("functional.kind is required");
  f.kind = parse_functional_kind(j.at("kind").get<std::string>());
  if (j.contains("x_tilde")) f.x_tilde = j.at("x_tilde").get<double>();
  if (j.contains("history")) f.history = parse_history(j.at("history").get<std::string>());
  f.x_index = j.value("x_index", std::size_t(0));
  f.y0 = j.value("y0", 0);
  if ((f.kind == FunctionalKind::PosteriorMeanA || f.kind == FunctionalKind::CounterfactualNoDynamics) &&
      f.history.empty())
    throw InputError("this functional needs a history");
  return f;
}

json functional_to_json(const FunctionalSpec& f) {
  json j{{"kind", to_string(f.kind)}, {"x_index", f.x_index}, {"y0", f.y0}};
  if (f.x_tilde) j["x_tilde"] = *f.x_tilde;
  if (!f.history.empty()) j["history"] = history_string(f.history);
  return j;
}

bool any_equalities(const ModelSpec& spec, const PopulationProbs& P) {
  VectorXd ref(spec.n_params());
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = 0.37 + 0.13 * double(i);
  for (const auto& cell : P.cells) {
    const ModelSpec s = normalized(with_initial(spec, cell.y0));
    const auto pat = make_pattern(s, s.x_at(cell.x_index));
    if (pat.n_hist() > pat.d + 1) return true;
  }
  return false;
}

const DgpCell* find_dgp(const RunConfig& cfg, std::size_t x_index, int y0) {
  for (const auto& c : cfg.dgp)
    if (c.x_index == x_index && c.y0 == y0) return &c;
  return nullptr;
}

void prepare_out(const RunConfig& cfg) { std::filesystem::create_directories(cfg.out_dir); }

std::string theta_text(const Theta& th) {
  std::ostringstream s;
  const VectorXd v = flatten(th);
  s << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << io::num(v(i));
  s << ")";
  return s.str();
}

} // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kTopKeys.count(key)) throw InputError("unknown config field: " + key);
  if (!j.contains("model")) throw InputError("config.model is required");
  try {
    RunConfig cfg;
    cfg.model = io::model_from_json(j.at("model"));
    const Eigen::Index k = cfg.model.n_params();

    if (j.contains("dgp")) {
      const json& d = j.at("dgp");
      if (!d.contains("theta")) throw InputError("dgp.theta is required");
      cfg.theta = io::theta_from_json(cfg.model, d.at("theta"));
      if (d.contains("cells")) {
        for (const auto& c : d.at("cells")) {
          DgpCell cell;
          cell.x_index = c.value("x_index", std::size_t(0));
          cell.y0 = c.value("y0", 0);
          if (!c.contains("mixture")) throw InputError("each dgp cell needs a mixture");
          cell.mixture = io::mixture_from_json(c.at("mixture"));
          cfg.dgp.push_back(cell);
        }
      } else if (d.contains("mixture")) {
        // one mixture shared by every covariate cell and listed initial condition
        const auto mix = io::mixture_from_json(d.at("mixture"));
        std::vector<int> y0s = d.value("y0", std::vector<int>{0});
        for (std::size_t x = 0; x < cfg.model.n_support(); ++x)
          for (int y0 : y0s) cfg.dgp.push_back({x, y0, mix});
      } else {
        throw InputError("dgp needs cells or a shared mixture");
      }
      for (const auto& c : cfg.dgp) {
        if (c.x_index >= cfg.model.n_support()) throw InputError("dgp cell x_index outside support_X");
        if (c.y0 != 0 && c.y0 != 1) throw InputError("dgp cell y0 must be 0 or 1");
      }
    }

    if (j.contains("probabilities")) {
      PopulationProbs P;
      P.T = cfg.model.T;
      for (const auto& c : j.at("probabilities")) {
        CellProbs cell;
        cell.x_index = c.value("x_index", std::size_t(0));
        cell.y0 = c.value("y0", 0);
        if (cell.x_index >= cfg.model.n_support()) throw InputError("probabilities x_index outside support_X");
        const VectorXd p = io::vector_from_json(c.at("p"));
        if (p.size() != (Eigen::Index(1) << cfg.model.T)) throw InputError("probability vector must have 2^T entries");
        const auto perm = order_permutation(cfg.model.T, parse_order(c.value("order", std::string("canonical"))));
        cell.p = from_order(p, perm);
        if ((cell.p.array() < 0).any()) throw InputError("probabilities must be nonnegative");
        if (std::abs(cell.p.sum() - 1.0) > 1e-6) throw InputError("probabilities of a cell must sum to one");
        P.add(cell);
      }
      cfg.probabilities = P;
    }

    if (j.contains("simulate")) {
      const json& s = j.at("simulate");
      cfg.sim_n = s.value("n", std::uint64_t(0));
      cfg.seed = s.value("seed", std::uint64_t(0));
      cfg.identify_from_simulation = s.value("use_for_identification", false);
    }

    if (j.contains("identify")) {
      const json& id = j.at("identify");
      cfg.method = id.value("method", std::string("auto"));
      if (cfg.method != "auto" && cfg.method != "closed_form" && cfg.method != "roots" && cfg.method != "grid")
        throw InputError("identify.method must be auto, closed_form, roots or grid");
      if (id.contains("box")) cfg.box = box_from_json(id.at("box"), k);
      cfg.grid_step = positive(id, "grid_step", cfg.grid_step);
      cfg.numeric.step = positive(id, "numeric_step", cfg.numeric.step);
      cfg.membership.allow_degenerate = id.value("allow_degenerate", false);
    }

    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      cfg.membership.eq_tol = positive(t, "equality", cfg.membership.eq_tol);
      cfg.numeric.accept_tol = positive(t, "root_accept", cfg.numeric.accept_tol);
      cfg.feasibility.tol_feas = positive(t, "feasibility", cfg.feasibility.tol_feas);
      cfg.membership.psd_slack = t.value("psd_slack", 0.0);
      if (cfg.membership.psd_slack < 0) throw InputError("psd_slack must be nonnegative");
    }

    if (j.contains("functionals"))
      for (const auto& f : j.at("functionals")) cfg.functionals.push_back(functional_from_json(f));

    if (j.contains("check")) {
      const json& c = j.at("check");
      if (c.contains("thetas"))
        for (const auto& t : c.at("thetas")) cfg.check_thetas.push_back(io::theta_from_json(cfg.model, t));
    }

    if (j.contains("output_dir")) cfg.out_dir = j.at("output_dir").get<std::string>();
    return cfg;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

SearchBox parse_box(const std::string& s, Eigen::Index k) {
  std::vector<std::pair<double, double>> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("--box entries look like lo:hi");
    try {
      parts.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw InputError("--box entries must be numbers: " + item);
    }
  }
  if (Eigen::Index(parts.size()) != k)
    throw InputError("--box needs " + std::to_string(k) + " lo:hi entries");
  SearchBox b{VectorXd(k), VectorXd(k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    b.lo(i) = parts[std::size_t(i)].first;
    b.hi(i) = parts[std::size_t(i)].second;
    if (!(b.lo(i) < b.hi(i))) throw InputError("--box entries need lo < hi");
  }
  return b;
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.grid_step) {
    if (!(*o.grid_step > 0)) throw InputError("--grid-step must be positive");
    cfg.grid_step = *o.grid_step;
  }
  if (o.box) cfg.box = parse_box(*o.box, cfg.model.n_params());
}

PopulationProbs observed_probs(const RunConfig& cfg) {
  if (cfg.probabilities) return *cfg.probabilities;
  if (!cfg.theta || cfg.dgp.empty()) throw InputError("config needs either probabilities or a dgp");
  PopulationProbs P;
  P.T = cfg.model.T;
  for (std::size_t i = 0; i < cfg.dgp.size(); ++i) {
    const auto& c = cfg.dgp[i];
    if (cfg.identify_from_simulation) {
      if (cfg.sim_n == 0) throw InputError("simulate.n must be positive to identify from a simulation");
      P.add(simulate_panel(cfg.model, *cfg.theta, c.mixture, c.x_index, c.y0, cfg.sim_n, cfg.seed + 1000003ull * i));
    } else {
      P.add(population_cell(cfg.model, *cfg.theta, c.mixture, c.x_index, c.y0));
    }
  }
  return P;
}

IdentifyOutcome run_identification(const RunConfig& cfg, const PopulationProbs& P) {
  const ModelSpec& spec = cfg.model;
  const SearchBox box = cfg.box.value_or(SearchBox::cube(spec.n_params(), -4.0, 4.0));
  const bool t2_closed = spec.family == Family::AR1 && spec.T == 2 && spec.covariates == CovariateKind::None &&
                         P.cells.size() == 1 && P.cells[0].y0 == 0;
  std::string method = cfg.method;
  if (method == "auto") method = t2_closed ? "closed_form" : any_equalities(spec, P) ? "roots" : "grid";

  IdentifyOutcome out;
  GridOptions go;
  go.step = cfg.grid_step;
  go.membership = cfg.membership;
  if (method == "closed_form") {
    if (!t2_closed) throw InputError("closed-form bounds need AR1, T = 2, no covariates and a single y0 = 0 cell");
    out.set = sharp_bounds_T2(P.cells[0].p);
  } else if (method == "roots") {
    out.roots = solve_equalities(spec, P, box, cfg.numeric);
    const auto& c = out.roots->candidates;
    const bool all_partial =
        !c.empty() && std::all_of(c.begin(), c.end(), [](const RootCandidate& r) { return !r.free_params.empty(); });
    if (all_partial) out.set = grid_identify(spec, P, box, go);
    else out.set = filter_roots(*out.roots, spec, P, cfg.membership);
  } else {
    out.set = grid_identify(spec, P, box, go);
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.theta || cfg.dgp.empty()) throw InputError("simulate needs a dgp with theta and mixtures");
  prepare_out(cfg);
  RunConfig exact = cfg;
  exact.identify_from_simulation = false;
  exact.probabilities.reset();
  const PopulationProbs P = observed_probs(exact);
  io::probs_csv(P).save(cfg.out_dir / "population.csv");
  json summary{{"model", io::to_json(cfg.model)}, {"theta", io::to_json(*cfg.theta)}};
  json cells = json::array();
  for (const auto& c : cfg.dgp)
    cells.push_back({{"x_index", c.x_index}, {"y0", c.y0}, {"mixture", io::to_json(c.mixture)}});
  summary["cells"] = cells;
  log << "population probabilities: " << (cfg.out_dir / "population.csv").string() << "\n";
  if (cfg.sim_n > 0) {
    RunConfig sim = exact;
    sim.identify_from_simulation = true;
    const PopulationProbs E = observed_probs(sim);
    io::probs_csv(E).save(cfg.out_dir / "empirical.csv");
    summary["simulation"] = {{"n", cfg.sim_n}, {"seed", cfg.seed}};
    log << "empirical frequencies (n = " << cfg.sim_n << ", seed = " << cfg.seed
        << "): " << (cfg.out_dir / "empirical.csv").string() << "\n";
  }
  io::write_json(cfg.out_dir / "simulate.json", summary);
  return kExitOk;
}

namespace {

void write_identification(const RunConfig& cfg, const PopulationProbs& P, const IdentifyOutcome& o,
                          std::ostream& log) {
  const ModelSpec& spec = cfg.model;
  json j{{"model", io::to_json(spec)}};
  if (o.roots) {
    j["roots"] = io::to_json(*o.roots);
    io::roots_csv(*o.roots, spec).save(cfg.out_dir / "roots.csv");
  }
  j["identified_set"] = io::to_json(o.set, spec);
  io::write_json(cfg.out_dir / "identified_set.json", j);
  io::probs_csv(P).save(cfg.out_dir / "probabilities.csv");
  if (o.set.kind == SetKind::GridRegion || !o.set.cells.empty())
    io::region_csv(o.set, spec).save(cfg.out_dir / "region.csv");
  if (!o.set.curves.empty()) {
    auto header = std::vector<std::string>{"curve", "vertex"};
    for (const auto& n : io::param_names(spec)) header.push_back(n);
    header.push_back("hankel_member");
    io::CsvWriter w(header);
    const auto patterns = cell_patterns(spec, P);
    for (std::size_t c = 0; c < o.set.curves.size(); ++c)
      for (std::size_t v = 0; v < o.set.curves[c].vertices.size(); ++v) {
        const VectorXd& p = o.set.curves[c].vertices[v];
        std::vector<std::string> row{std::to_string(c), std::to_string(v)};
        for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(io::num(p(i)));
        const auto tm = theta_membership(patterns, unflatten(spec, p), P, cfg.membership);
        bool hank = true;
        for (const auto& cell : tm.cells) hank = hank && cell.report.is_member;
        row.push_back(hank ? "1" : "0");
        w.row(row);
      }
    w.save(cfg.out_dir / "curves.csv");
  }

  log << "identified set: " << to_string(o.set.kind);
  if (o.set.kind == SetKind::Interval) log << " B in [" << io::num(o.set.B.lo) << ", " << io::num(o.set.B.hi) << "]";
  if (o.set.kind == SetKind::Point || o.set.kind == SetKind::FiniteSet)
    for (const auto& m : o.set.members) log << " " << theta_text(m);
  if (o.set.kind == SetKind::GridRegion) {
    const auto names = io::param_names(spec);
    for (std::size_t i = 0; i < o.set.bounds.size(); ++i)
      log << " " << names[i] << " in [" << io::num(o.set.bounds[i].lo) << ", " << io::num(o.set.bounds[i].hi) << "]";
  }
  log << "\n";
  if (o.roots) log << "equality roots: " << o.roots->candidates.size() << " (" << o.roots->method << ")\n";
  if (!o.set.diagnostic.empty()) log << "note: " << o.set.diagnostic << "\n";
}

} // namespace

int cmd_identify(const RunConfig& cfg, std::ostream& log) {
  const PopulationProbs P = observed_probs(cfg);
  prepare_out(cfg);
  const IdentifyOutcome o = run_identification(cfg, P);
  write_identification(cfg, P, o, log);
  return o.set.empty() ? kExitEmptySet : kExitOk;
}

int cmd_bound_functional(const RunConfig& cfg, std::ostream& log) {
  if (cfg.functionals.empty()) throw InputError("config.functionals is empty");
  const PopulationProbs P = observed_probs(cfg);
  prepare_out(cfg);
  const IdentifyOutcome o = run_identification(cfg, P);
  write_identification(cfg, P, o, log);
  if (o.set.empty()) return kExitEmptySet;

  json results = json::array();
  bool inadmissible = false;
  for (const auto& f : cfg.functionals) {
    json r = functional_to_json(f);
    const ModelSpec cell_spec = normalized(with_initial(cfg.model, f.y0));
    r["x"] = io::to_json(cell_spec.x_at(f.x_index));
    try {
      const FunctionalBounds b = functional_bounds(f, cfg.model, o.set, P);
      if (b.point) r["point"] = b.lo;
      else r["bounds"] = {b.lo, b.hi};
      r["eta"] = io::to_json(b.at_lo.eta);
      r["r"] = io::to_json(b.at_lo.r);
      r["evaluated"] = b.evaluated;
      log << to_string(f.kind) << " x" << f.x_index << "/y0=" << f.y0 << ": ";
      if (b.point) log << io::num(b.lo);
      else log << "[" << io::num(b.lo) << ", " << io::num(b.hi) << "]";
      if (const DgpCell* d = cfg.theta ? find_dgp(cfg, f.x_index, f.y0) : nullptr) {
        const double truth = functional_truth(f, cell_spec, *cfg.theta, d->mixture, cell_spec.x_at(f.x_index));
        r["truth"] = truth;
        log << " (dgp value " << io::num(truth) << ")";
      }
      log << "\n";
    } catch (const InadmissibleFunctional& e) {
      inadmissible = true;
      r["error"] = e.what();
      log << to_string(f.kind) << ": inadmissible: " << e.what() << "\n";
    }
    results.push_back(r);
  }
  io::write_json(cfg.out_dir / "functionals.json", json{{"functionals", results}});
  return inadmissible ? kExitInadmissible : kExitOk;
}

int cmd_check_theta(const RunConfig& cfg, std::ostream& log) {
  std::vector<Theta> thetas = cfg.check_thetas;
  if (thetas.empty() && cfg.theta) thetas.push_back(*cfg.theta);
  if (thetas.empty()) throw InputError("check.thetas is empty and no dgp theta is given");
  const PopulationProbs P = observed_probs(cfg);
  prepare_out(cfg);
  auto header = io::param_names(cfg.model);
  for (const char* h : {"member", "min_slack", "binding", "feasible", "feasibility_residual"}) header.push_back(h);
  io::CsvWriter w(header);
  json arr = json::array();
  for (const auto& th : thetas) {
    const auto tm = theta_membership(cfg.model, th, P, cfg.membership);
    const auto fe = feasibility_check(cfg.model, th, P, cfg.feasibility);
    std::vector<std::string> row;
    const VectorXd v = flatten(th);
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(io::num(v(i)));
    row.push_back(tm.member ? "1" : "0");
    row.push_back(io::num(tm.min_slack));
    row.push_back(tm.binding);
    row.push_back(fe.feasible ? "1" : "0");
    row.push_back(io::num(fe.residual));
    w.row(row);
    arr.push_back({{"theta", io::to_json(v)}, {"membership", io::to_json(tm)}, {"feasibility", io::to_json(fe)}});
    log << theta_text(th) << ": " << (tm.member ? "member" : "rejected") << ", mixture oracle "
        << (fe.feasible ? "feasible" : "infeasible") << "\n";
  }
  w.save(cfg.out_dir / "check_theta.csv");
  io::write_json(cfg.out_dir / "check_theta.json", json{{"checks", arr}});
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sharp identified sets for dynamic panel logit models with fixed effects", "panel-id"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every verb");

  std::string config_path;
  Overrides ov;
  std::string out_dir, box;
  std::uint64_t seed = 0;
  double grid_step = 0;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Simulation seed (overrides simulate.seed)");
    sub->add_option("--grid-step", grid_step, "Grid step (overrides identify.grid_step)");
    sub->add_option("--box", box, "Search box \"lo:hi,...\" (overrides identify.box)");
  };
  auto* sim = app.add_subcommand("simulate", "Population and simulated history probabilities");
  auto* idn = app.add_subcommand("identify", "Identified set of the structural parameters");
  auto* bnd = app.add_subcommand("bound-functional", "Point values or sharp bounds of functionals");
  auto* chk = app.add_subcommand("check-theta", "Membership and mixture-oracle checks at given parameters");
  auto* rep = app.add_subcommand("reproduce", "Run a bundled worked example and compare with reference values");
  for (auto* s : {sim, idn, bnd, chk}) add_common(s, true);
  std::string example;
  bool list = false;
  rep->add_option("example", example, "Example id");
  rep->add_flag("--list", list, "List example ids");
  rep->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (rep->parsed()) {
      if (list) {
        for (const auto& id : example_ids()) out << id << "\n";
        return kExitOk;
      }
      if (example.empty()) throw InputError("reproduce needs an example id (see --list)");
      return cmd_reproduce(example, out_dir.empty() ? std::filesystem::path("out") / example : std::filesystem::path(out_dir), out);
    }
    RunConfig cfg = parse_config(io::read_json(config_path));
    CLI::App* active = app.get_subcommands().front();
    if (!out_dir.empty()) ov.out_dir = out_dir;
    if (active->count("--seed")) ov.seed = seed;
    if (active->count("--grid-step")) ov.grid_step = grid_step;
    if (!box.empty()) ov.box = box;
    apply_overrides(cfg, ov);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (idn->parsed()) return cmd_identify(cfg, out);
    if (bnd->parsed()) return cmd_bound_functional(cfg, out);
    return cmd_check_theta(cfg, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DegenerateModel& e) {
    err << "degenerate model: " << e.what() << "\n";
    return kExitInput;
  } catch (const EmptyIdentifiedSet& e) {
    err << "empty identified set: " << e.what() << "\n";
    return kExitEmptySet;
  } catch (const InadmissibleFunctional& e) {
    err << "inadmissible functional: " << e.what() << "\n";
    return kExitInadmissible;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
}

} // namespace panelid
