#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "panelid/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>

using namespace panelid;
namespace fs = std::filesystem;
using io::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "panel-id-test-cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "panel-id");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json time_trend_config() {
  return {{"model", {{"family", "AR1"}, {"T", 3}, {"covariates", "time_trend"}}},
          {"dgp", {{"theta", {{"beta", {0.5}}, {"gamma", {0.8}}}}, {"mixture", {{"alphas", {-2.0, 1.0}}}}}},
          {"identify", {{"method", "roots"}, {"box", {{-4, 4}, {-4, 4}}}}}};
}

json t3_config() {
  return {{"model", {{"T", 3}}},
          {"dgp", {{"theta", {{"beta", {0.5}}}}, {"mixture", {{"alphas", {-2.0, 1.0}}}}}}};
}

} // namespace

TEST_CASE("missing dgp is an input error") {
  const fs::path d = scratch("missing-dgp");
  const fs::path cfg = write_config(d, {{"model", {{"T", 3}}}});
  CHECK(run({"simulate", "--config", cfg.string(), "--out", (d / "out").string()}) == kExitInput);
}

TEST_CASE("command line errors map to exit code 2") {
  CHECK(run({}) == kExitInput);
  CHECK(run({"frobnicate"}) == kExitInput);
  CHECK(run({"identify"}) == kExitInput);
  CHECK(run({"identify", "--config", "/nonexistent/config.json"}) == kExitInput);
  CHECK(run({"reproduce", "no-such-example", "--out", scratch("unknown").string()}) == kExitInput);
  CHECK(run({"--help"}) == kExitOk);
}

TEST_CASE("malformed configs are rejected") {
  const fs::path d = scratch("bad-config");
  for (const json& j : {json{{"model", {{"T", 3}}}, {"surprise", 1}},
                        json{{"model", {{"family", "AR3"}, {"T", 3}}}},
                        json{{"model", {{"T", 3}}}, {"identify", {{"grid_step", -0.1}}}},
                        json{{"model", {{"covariates", "series"}}}}}) {
    CAPTURE(j.dump());
    CHECK_THROWS_AS(parse_config(j), InputError);
  }
  std::ofstream(d / "broken.json") << "{ not json";
  CHECK(run({"identify", "--config", (d / "broken.json").string()}) == kExitInput);
}

TEST_CASE("simulate writes the time-trend probabilities") {
  const fs::path d = scratch("simulate");
  const fs::path cfg = write_config(d, time_trend_config());
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (d / "out").string()}) == kExitOk);
  const std::string csv = slurp(d / "out" / "population.csv");
  CHECK(csv.rfind("x_index,y0,history,probability,observations\n", 0) == 0);
  // published values are truncated to four digits
  CHECK(csv.find("0,0,000,0.0924") != std::string::npos);
  CHECK(csv.find("0,0,111,0.4456") != std::string::npos);
}

TEST_CASE("seeded simulations are byte identical across runs") {
  const fs::path d = scratch("determinism");
  json j = time_trend_config();
  j["simulate"] = {{"n", 100000}, {"seed", 17}};
  const fs::path cfg = write_config(d, j);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (d / "a").string()}) == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (d / "b").string()}) == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (d / "c").string(), "--seed", "18"}) == kExitOk);
  CHECK(slurp(d / "a" / "empirical.csv") == slurp(d / "b" / "empirical.csv"));
  CHECK(slurp(d / "a" / "simulate.json") == slurp(d / "b" / "simulate.json"));
  CHECK(slurp(d / "a" / "empirical.csv") != slurp(d / "c" / "empirical.csv"));
}

TEST_CASE("identify: time-trend point and byte-identical reruns") {
  const fs::path d = scratch("identify");
  const fs::path cfg = write_config(d, time_trend_config());
  REQUIRE(run({"identify", "--config", cfg.string(), "--out", (d / "a").string()}) == kExitOk);
  REQUIRE(run({"identify", "--config", cfg.string(), "--out", (d / "b").string()}) == kExitOk);
  const json set = io::read_json(d / "a" / "identified_set.json");
  CHECK(set["identified_set"]["kind"] == "point");
  CHECK(set["roots"]["candidates"].size() == 2);
  CHECK(slurp(d / "a" / "identified_set.json") == slurp(d / "b" / "identified_set.json"));
  CHECK(slurp(d / "a" / "roots.csv") == slurp(d / "b" / "roots.csv"));
}

TEST_CASE("identify: T = 2 interval") {
  const fs::path d = scratch("interval");
  const fs::path cfg = write_config(
      d, {{"model", {{"T", 2}}},
          {"dgp", {{"theta", {{"beta", {std::log(1.5)}}}}, {"mixture", {{"alphas", {-2.0, 1.0}}}}}}});
  REQUIRE(run({"identify", "--config", cfg.string(), "--out", d.string()}) == kExitOk);
  const json set = io::read_json(d / "identified_set.json")["identified_set"];
  CHECK(set["kind"] == "interval");
  CHECK(set["beta_sign"] == 1);
  CHECK(set["B"][0].get<double>() <= 1.5);
  CHECK(set["B"][1].get<double>() >= 1.5);
}

TEST_CASE("identify: box and grid-step flags override the config") {
  const fs::path d = scratch("grid");
  const fs::path cfg = write_config(
      d, {{"model", {{"T", 2}, {"covariates", "series"}, {"support_X", {{1, 0}, {0, 0}}}}},
          {"dgp", {{"theta", {{"beta", {0.5}}, {"gamma", {0.8}}}}, {"mixture", {{"alphas", {-2.0, 1.0}}}}}},
          {"identify", {{"method", "grid"}, {"grid_step", 0.5}}}});
  REQUIRE(run({"identify", "--config", cfg.string(), "--out", d.string(), "--box", "0:1,0.4:1.2", "--grid-step",
               "0.05"}) == kExitOk);
  const std::string region = slurp(d / "region.csv");
  CHECK(region.rfind("beta,gamma,member,boundary,min_slack,binding\n", 0) == 0);
  const json set = io::read_json(d / "identified_set.json")["identified_set"];
  CHECK(set["kind"] == "grid_region");
  CHECK(set["grid_nodes"] == 21 * 17);
  CHECK(run({"identify", "--config", cfg.string(), "--out", d.string(), "--box", "0:1"}) == kExitInput);
  CHECK(run({"identify", "--config", cfg.string(), "--out", d.string(), "--box", "1:0,0:1"}) == kExitInput);
}

TEST_CASE("misspecified exact probabilities give exit code 3") {
  const fs::path d = scratch("empty");
  json j = {{"model", {{"T", 3}}}};
  // independent periods with drifting intercepts: not an AR(1) logit with a fixed effect
  std::vector<double> p(8);
  const double q[3] = {0.2, 0.5, 0.8};
  for (int code = 0; code < 8; ++code) {
    double v = 1.0;
    for (int t = 0; t < 3; ++t) v *= ((code >> (2 - t)) & 1) ? q[t] : 1.0 - q[t];
    p[std::size_t(code)] = v;
  }
  j["probabilities"] = {{{"x_index", 0}, {"y0", 0}, {"p", p}}};
  const fs::path cfg = write_config(d, j);
  CHECK(run({"identify", "--config", cfg.string(), "--out", d.string()}) == kExitEmptySet);
  CHECK(io::read_json(d / "identified_set.json")["identified_set"]["kind"] == "empty");
}

TEST_CASE("bound-functional: point AME and inadmissible requests") {
  const fs::path d = scratch("functional");
  json j = t3_config();
  j["functionals"] = {{{"kind", "ame_nocov"}}, {{"kind", "posterior_mean_a"}, {"history", "001"}}};
  REQUIRE(run({"bound-functional", "--config", write_config(d, j).string(), "--out", d.string()}) == kExitOk);
  const json f = io::read_json(d / "functionals.json")["functionals"];
  REQUIRE(f.size() == 2);
  CHECK(std::abs(f[0]["point"].get<double>() - f[0]["truth"].get<double>()) < 1e-10);
  CHECK(std::abs(f[1]["point"].get<double>() - f[1]["truth"].get<double>()) < 1e-9);

  j["functionals"] = {{{"kind", "posterior_mean_a"}, {"history", "111"}}};
  CHECK(run({"bound-functional", "--config", write_config(d, j).string(), "--out", d.string()}) ==
        kExitInadmissible);
  j["functionals"] = {{{"kind", "ame_wrong"}}};
  CHECK(run({"bound-functional", "--config", write_config(d, j).string(), "--out", d.string()}) == kExitInput);
}

TEST_CASE("bound-functional: beta = 0 gives a zero AME") {
  const fs::path d = scratch("beta0");
  json j = {{"model", {{"T", 3}}},
            {"dgp", {{"theta", {{"beta", {0.0}}}}, {"mixture", {{"alphas", {-2.0, 1.0}}}}}},
            {"functionals", {{{"kind", "ame_nocov"}}}}};
  // B = 1 makes G rank deficient, so the default refuses the root
  CHECK(run({"bound-functional", "--config", write_config(d, j).string(), "--out", d.string()}) == kExitInput);
  j["identify"] = {{"allow_degenerate", true}};
  REQUIRE(run({"bound-functional", "--config", write_config(d, j).string(), "--out", d.string()}) == kExitOk);
  CHECK(io::read_json(d / "functionals.json")["functionals"][0]["point"].get<double>() == 0.0);
}

TEST_CASE("check-theta reports membership and the oracle") {
  const fs::path d = scratch("check");
  json j = time_trend_config();
  j["check"] = {{"thetas", {{0.5, 0.8}, {1.14879, 0.297439}}}};
  REQUIRE(run({"check-theta", "--config", write_config(d, j).string(), "--out", d.string()}) == kExitOk);
  const std::string csv = slurp(d / "check_theta.csv");
  std::istringstream lines(csv);
  std::string header, truth, other;
  std::getline(lines, header);
  std::getline(lines, truth);
  std::getline(lines, other);
  CHECK(header == "beta,gamma,member,min_slack,binding,feasible,feasibility_residual");
  CHECK(truth.find(",1,") != std::string::npos);
  CHECK(other.rfind("1.14879,0.297439,0,", 0) == 0);
}

TEST_CASE("reproduce lists its examples") {
  std::string text;
  CHECK(run({"reproduce", "--list"}, &text) == kExitOk);
  for (const auto& id : example_ids()) CHECK(text.find(id) != std::string::npos);
}

TEST_CASE("floats are written with 12 significant digits") {
  CHECK(io::num(1.0 / 3.0) == "0.333333333333");
  CHECK(io::num(-0.0) == "0");
  CHECK(io::num(1e-20) == "1e-20");
}

TEST_CASE("the installed binary honours the exit code contract") {
  const char* bin = std::getenv("PANEL_ID_CLI");
  if (!bin) {
    MESSAGE("PANEL_ID_CLI not set; binary checks skipped");
    return;
  }
  const fs::path d = scratch("binary");
  const fs::path cfg = write_config(d, {{"model", {{"T", 3}}}});
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string b = std::string("\"") + bin + "\"";
  CHECK(status(b + " simulate --config " + cfg.string() + " --out " + (d / "o").string()) == 2);
  CHECK(status(b + " bogus") == 2);
  json j = t3_config();
  j["functionals"] = {{{"kind", "counterfactual_no_dynamics"}, {"history", "111"}, {"y0", 1}}};
  j["dgp"]["y0"] = {0, 1};
  const fs::path cfg4 = write_config(d, j);
  CHECK(status(b + " bound-functional --config " + cfg4.string() + " --out " + (d / "o").string()) == 4);
  CHECK(status(b + " reproduce --list") == 0);
}
