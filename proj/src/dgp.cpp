#include "panelid/dgp.hpp"

#include "panelid/parallel.hpp"
#include "panelid/philox.hpp"

#include <cmath>

namespace panelid {

DiscreteMixture DiscreteMixture::point(double alpha) {
  return {VectorXd::Constant(1, alpha), VectorXd::Ones(1)};
}

DiscreteMixture DiscreteMixture::equal(std::initializer_list<double> alphas) {
  DiscreteMixture m;
  m.alphas = Eigen::Map<const VectorXd>(alphas.begin(), Eigen::Index(alphas.size()));
  m.weights = VectorXd::Constant(m.alphas.size(), 1.0 / double(m.alphas.size()));
  return m;
}

void DiscreteMixture::validate() const {
  if (alphas.size() == 0 || alphas.size() != weights.size())
    throw InputError("mixture needs matching, non-empty alphas and weights");
  if (!alphas.allFinite() || !weights.allFinite()) throw InputError("mixture entries must be finite");
  for (Eigen::Index i = 1; i < alphas.size(); ++i)
    if (!(alphas(i) > alphas(i - 1))) throw InputError("mixture alphas must be strictly increasing");
  if (weights.minCoeff() < 0.0) throw InputError("mixture weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw InputError("mixture weights must sum to one");
}

const CellProbs* PopulationProbs::find(std::size_t x_index, int y0) const {
  for (const auto& c : cells)
    if (c.x_index == x_index && c.y0 == y0) return &c;
  return nullptr;
}

bool PopulationProbs::has_y0(int y0) const {
  for (const auto& c : cells)
    if (c.y0 == y0) return true;
  return false;
}

void PopulationProbs::add(CellProbs c) {
  if (T == 0) T = int(std::lround(std::log2(double(c.p.size()))));
  if (c.p.size() != (Eigen::Index(1) << T)) throw InputError("probability vector must have 2^T entries");
  if (find(c.x_index, c.y0)) throw InputError("duplicate (x, y0) cell");
  cells.push_back(std::move(c));
}

VectorXd population_probs(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix, const VectorXd& x) {
  mix.validate();
  const auto rep = build_representation(spec, th, x);
  VectorXd p = VectorXd::Zero(rep.n_hist());
  for (Eigen::Index k = 0; k < mix.alphas.size(); ++k)
    p += mix.weights(k) * likelihood_vector(rep, std::exp(mix.alphas(k)));
  return p;
}

CellProbs population_cell(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix,
                          std::size_t x_index, int y0) {
  const ModelSpec s = normalized(with_initial(spec, y0));
  CellProbs c;
  c.x_index = x_index;
  c.y0 = y0;
  c.p = population_probs(s, th, mix, s.x_at(x_index));
  return c;
}

CellProbs simulate_panel(const ModelSpec& spec_in, const Theta& th, const DiscreteMixture& mix,
                         std::size_t x_index, int y0, std::uint64_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("simulate_panel needs n >= 1");
  mix.validate();
  const ModelSpec spec = normalized(with_initial(spec_in, y0));
  check_theta(spec, th);
  const VectorXd x = spec.x_at(x_index);
  const VectorXd z = detail::period_index(spec, th, x);
  const Philox4x32 rng(seed);
  const int T = spec.T;
  const std::size_t n_hist = std::size_t(1) << T;

  std::vector<std::vector<std::uint64_t>> partial(thread_count(), std::vector<std::uint64_t>(n_hist, 0));
  parallel_for(std::size_t(n), [&](std::size_t b, std::size_t e, unsigned w) {
    auto& counts = partial[w];
    std::vector<double> u(std::size_t(T + 1) + 1);
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t k = 0; k < u.size(); k += 2) {
        const auto pair = rng.uniforms(i, k / 2);
        u[k] = pair[0];
        if (k + 1 < u.size()) u[k + 1] = pair[1];
      }
      // categorical draw of alpha
      Eigen::Index atom = mix.alphas.size() - 1;
      double acc = 0.0;
      for (Eigen::Index a = 0; a < mix.alphas.size(); ++a) {
        acc += mix.weights(a);
        if (u[0] < acc) {
          atom = a;
          break;
        }
      }
      History h(std::size_t(T), 0);
      for (int t = 1; t <= T; ++t) {
        const auto term = detail::period_term(spec, th, h, t);
        const double idx = mix.alphas(atom) + term.lag + z(t - 1);
        const double prob = 1.0 / (1.0 + std::exp(-idx));
        h[std::size_t(t - 1)] = u[std::size_t(t)] < prob ? 1 : 0;
      }
      ++counts[history_code(h)];
    }
  });

  CellProbs c;
  c.x_index = x_index;
  c.y0 = y0;
  c.observations = n;
  c.p = VectorXd::Zero(Eigen::Index(n_hist));
  for (const auto& counts : partial)
    for (std::size_t j = 0; j < n_hist; ++j) c.p(Eigen::Index(j)) += double(counts[j]);
  c.p /= double(n);
  c.empty = false;
  return c;
}

} // namespace panelid
