#pragma once

#include "panelid/functionals.hpp"
#include "panelid/idset.hpp"
#include "panelid/io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace panelid {

enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1, // reproduce: a comparison against the reference values failed
  kExitInput = 2,
  kExitEmptySet = 3,
  kExitInadmissible = 4,
};

struct DgpCell {
  std::size_t x_index = 0;
  int y0 = 0;
  DiscreteMixture mixture;
};

struct RunConfig {
  ModelSpec model;
  std::optional<Theta> theta; // data generating parameter
  std::vector<DgpCell> dgp;
  std::optional<PopulationProbs> probabilities; // supplied directly, replaces the DGP

  std::uint64_t sim_n = 0;
  std::uint64_t seed = 0;
  bool identify_from_simulation = false;

  std::string method = "auto"; // auto | closed_form | roots | grid
  std::optional<SearchBox> box;
  double grid_step = 0.01;
  NumericOptions numeric;
  MembershipOptions membership;
  FeasibilityGrid feasibility;

  std::vector<FunctionalSpec> functionals;
  std::vector<Theta> check_thetas;

  std::filesystem::path out_dir = "out";
};

/// Validates the single JSON document describing a run.
RunConfig parse_config(const io::json& j);

struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
  std::optional<std::string> box; // "lo:hi,lo:hi,..."
};

/// Command line flags win over config fields.
void apply_overrides(RunConfig& cfg, const Overrides& o);

SearchBox parse_box(const std::string& s, Eigen::Index k);

/// Exact population probabilities from the DGP, the supplied table, or a seeded simulation.
PopulationProbs observed_probs(const RunConfig& cfg);

struct IdentifyOutcome {
  std::optional<RootSet> roots;
  IdentifiedSet set;
};

IdentifyOutcome run_identification(const RunConfig& cfg, const PopulationProbs& P);

int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_identify(const RunConfig& cfg, std::ostream& log);
int cmd_bound_functional(const RunConfig& cfg, std::ostream& log);
int cmd_check_theta(const RunConfig& cfg, std::ostream& log);
int cmd_reproduce(const std::string& id, const std::filesystem::path& out_dir, std::ostream& log);

std::vector<std::string> example_ids();

/// Full command line entry point; maps errors onto the exit code contract.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace panelid
