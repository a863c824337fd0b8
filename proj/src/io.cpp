#include "panelid/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace panelid::io {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v); // no "-0"
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      text_ += cells[i];
      continue;
    }
    text_ += '"';
    for (char c : cells[i]) {
      if (c == '"') text_ += '"';
      text_ += c;
    }
    text_ += '"';
  }
  text_ += '\n';
  return *this;
}

void CsvWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text_;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> param_names(const ModelSpec& spec) {
  std::vector<std::string> n;
  if (spec.family == Family::AR2) n = {"beta1", "beta2"};
  else n = {"beta"};
  if (spec.n_gamma() == 1) n.push_back("gamma");
  else
    for (int i = 1; i <= spec.n_gamma(); ++i) n.push_back("gamma" + std::to_string(i));
  return n;
}

namespace {

const char* covariate_name(CovariateKind k) {
  switch (k) {
  case CovariateKind::None: return "none";
  case CovariateKind::Series: return "series";
  case CovariateKind::TimeTrend: return "time_trend";
  case CovariateKind::TimeDummies: return "time_dummies";
  }
  return "none";
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace

json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw InputError("expected a number array");
  VectorXd v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("expected a number array");
    v(Eigen::Index(i)) = j[i].get<double>();
  }
  return v;
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw InputError("model must be an object");
  ModelSpec s;
  const std::string fam = get_or<std::string>(j, "family", "AR1");
  if (fam == "AR1") s.family = Family::AR1;
  else if (fam == "AR2") s.family = Family::AR2;
  else throw InputError("model.family must be AR1 or AR2");
  if (!j.contains("T")) throw InputError("model.T is required");
  s.T = j.at("T").get<int>();
  const std::string cov = get_or<std::string>(j, "covariates", "none");
  bool known = false;
  for (auto k : {CovariateKind::None, CovariateKind::Series, CovariateKind::TimeTrend, CovariateKind::TimeDummies})
    if (cov == covariate_name(k)) {
      s.covariates = k;
      known = true;
    }
  if (!known) throw InputError("model.covariates must be none, series, time_trend or time_dummies");
  if (j.contains("support_X"))
    for (const auto& x : j.at("support_X")) s.support_X.push_back(vector_from_json(x));
  s.y0 = get_or<int>(j, "y0", 0);
  s.y_minus1 = get_or<int>(j, "y_minus1", 0);
  return normalized(s);
}

json to_json(const ModelSpec& spec) {
  json j;
  j["family"] = spec.family == Family::AR1 ? "AR1" : "AR2";
  j["T"] = spec.T;
  j["covariates"] = covariate_name(spec.covariates);
  json xs = json::array();
  for (const auto& x : spec.support_X) xs.push_back(to_json(x));
  j["support_X"] = xs;
  if (spec.family == Family::AR2) j["y_minus1"] = spec.y_minus1;
  return j;
}

Theta theta_from_json(const ModelSpec& spec, const json& j) {
  Theta th;
  if (j.is_array()) {
    th = unflatten(spec, vector_from_json(j));
  } else {
    if (!j.contains("beta")) throw InputError("theta.beta is required");
    th.beta = vector_from_json(j.at("beta"));
    th.gamma = j.contains("gamma") ? vector_from_json(j.at("gamma")) : VectorXd();
  }
  check_theta(spec, th);
  return th;
}

json to_json(const Theta& th) { return json{{"beta", to_json(th.beta)}, {"gamma", to_json(th.gamma)}}; }

DiscreteMixture mixture_from_json(const json& j) {
  DiscreteMixture m;
  if (!j.contains("alphas")) throw InputError("mixture.alphas is required");
  m.alphas = vector_from_json(j.at("alphas"));
  m.weights = j.contains("weights") ? vector_from_json(j.at("weights"))
                                    : VectorXd::Constant(m.alphas.size(), 1.0 / double(m.alphas.size()));
  m.validate();
  return m;
}

json to_json(const DiscreteMixture& m) { return json{{"alphas", to_json(m.alphas)}, {"weights", to_json(m.weights)}}; }

json to_json(const RootSet& roots) {
  json j;
  j["method"] = roots.method;
  json c = json::array();
  for (const auto& r : roots.candidates) {
    json e{{"theta", to_json(flatten(r.theta))}, {"residual", r.residual}};
    if (!r.free_params.empty()) e["free_params"] = r.free_params;
    if (!r.note.empty()) e["note"] = r.note;
    c.push_back(e);
  }
  j["candidates"] = c;
  j["curves"] = roots.curves.size();
  if (!roots.diagnostic.empty()) j["diagnostic"] = roots.diagnostic;
  return j;
}

json to_json(const IdentifiedSet& set, const ModelSpec& spec) {
  json j;
  j["kind"] = to_string(set.kind);
  j["parameters"] = param_names(spec);
  if (set.kind == SetKind::Interval) {
    j["B"] = {set.B.lo, set.B.hi};
    j["beta_sign"] = set.beta_sign;
  }
  json b = json::array();
  for (const auto& iv : set.bounds) b.push_back({iv.lo, iv.hi});
  j["bounds"] = b;
  if (set.kind == SetKind::Point || set.kind == SetKind::FiniteSet) {
    json m = json::array();
    for (const auto& th : set.members) m.push_back(to_json(flatten(th)));
    j["members"] = m;
  }
  if (set.kind == SetKind::GridRegion) {
    j["grid_nodes"] = set.cells.size();
    j["grid_members"] = set.members.size();
    json sc = json::array();
    for (int d : set.scanned) sc.push_back(param_names(spec)[std::size_t(d)]);
    j["scanned"] = sc;
  }
  if (set.kind == SetKind::Curve) j["curves"] = set.curves.size();
  j["provenance"] = set.provenance;
  if (!set.diagnostic.empty()) j["diagnostic"] = set.diagnostic;
  return j;
}

json to_json(const ThetaMembership& tm) {
  json j;
  j["member"] = tm.member;
  j["min_slack"] = tm.min_slack;
  j["binding"] = tm.binding;
  json cells = json::array();
  for (const auto& c : tm.cells) {
    cells.push_back({{"x_index", c.x_index},
                     {"y0", c.y0},
                     {"degenerate", c.degenerate},
                     {"eq_residual", c.eq_residual},
                     {"eq_ok", c.eq_ok},
                     {"r", to_json(c.moments.r)},
                     {"min_eig_H", c.report.min_eig_H},
                     {"min_eig_B", c.report.min_eig_B},
                     {"singular_case", c.report.singular_case},
                     {"range_residual", c.report.range_residual},
                     {"hankel_member", c.report.is_member}});
  }
  j["cells"] = cells;
  return j;
}

json to_json(const Feasibility& f) {
  json j{{"feasible", f.feasible}, {"residual", f.residual}};
  json cells = json::array();
  for (const auto& c : f.cells)
    cells.push_back({{"x_index", c.x_index}, {"y0", c.y0}, {"feasible", c.feasible}, {"residual", c.residual}});
  j["cells"] = cells;
  return j;
}

CsvWriter probs_csv(const PopulationProbs& P) {
  CsvWriter w({"x_index", "y0", "history", "probability", "observations"});
  for (const auto& c : P.cells) {
    const auto hs = enumerate_histories(P.T);
    for (std::size_t j = 0; j < hs.size(); ++j)
      w.row({std::to_string(c.x_index), std::to_string(c.y0), history_string(hs[j]), num(c.p(Eigen::Index(j))),
             std::to_string(c.observations)});
  }
  return w;
}

CsvWriter region_csv(const IdentifiedSet& set, const ModelSpec& spec) {
  auto header = param_names(spec);
  for (const char* h : {"member", "boundary", "min_slack", "binding"}) header.push_back(h);
  CsvWriter w(header);
  for (const auto& c : set.cells) {
    std::vector<std::string> row;
    for (Eigen::Index i = 0; i < c.params.size(); ++i) row.push_back(num(c.params(i)));
    row.push_back(c.member ? "1" : "0");
    row.push_back(c.boundary ? "1" : "0");
    row.push_back(num(c.min_slack));
    row.push_back(c.binding);
    w.row(row);
  }
  return w;
}

CsvWriter roots_csv(const RootSet& roots, const ModelSpec& spec) {
  auto header = param_names(spec);
  header.push_back("residual");
  header.push_back("free_params");
  CsvWriter w(header);
  for (const auto& r : roots.candidates) {
    std::vector<std::string> row;
    const VectorXd v = flatten(r.theta);
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(num(v(i)));
    row.push_back(num(r.residual));
    std::string fp;
    for (int f : r.free_params) fp += (fp.empty() ? "" : ";") + param_names(spec)[std::size_t(f)];
    row.push_back(fp);
    w.row(row);
  }
  return w;
}

} // namespace panelid::io
