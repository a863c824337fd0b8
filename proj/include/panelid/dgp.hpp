#pragma once

#include "panelid/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace panelid {

struct DiscreteMixture {
  VectorXd alphas;  // strictly increasing
  VectorXd weights; // nonnegative, summing to one

  static DiscreteMixture point(double alpha);
  static DiscreteMixture equal(std::initializer_list<double> alphas);
  void validate() const;
};

/// Probabilities over canonical histories for one (x, y0) cell.
struct CellProbs {
  std::size_t x_index = 0;
  int y0 = 0;
  VectorXd p;
  std::uint64_t observations = 0; // simulated cells only; 0 for population cells
  bool empty = false;             // simulated cell without any observation
};

struct PopulationProbs {
  int T = 0;
  std::vector<CellProbs> cells;

  const CellProbs* find(std::size_t x_index, int y0) const;
  bool has_y0(int y0) const;
  void add(CellProbs c);
};

/// Exact mixture integration of the history likelihoods for spec.y0.
VectorXd population_probs(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix,
                          const VectorXd& x = VectorXd());

CellProbs population_cell(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix,
                          std::size_t x_index, int y0);

/// Simulated history frequencies for n individuals. Individual i draws from the
/// Philox4x32-10 stream keyed by seed with stream index i.
CellProbs simulate_panel(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix,
                         std::size_t x_index, int y0, std::uint64_t n, std::uint64_t seed);

} // namespace panelid
