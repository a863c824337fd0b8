#pragma once

#include "panelid/functionals.hpp"
#include "panelid/idset.hpp"
#include "panelid/oracle.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace panelid::io {

using json = nlohmann::ordered_json;

/// Fixed 12 significant digit rendering used by every CSV artifact.
std::string num(double v);

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  void save(const std::filesystem::path& path) const;
  const std::string& text() const { return text_; }

private:
  std::size_t cols_;
  std::string text_;
};

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

std::vector<std::string> param_names(const ModelSpec& spec);

ModelSpec model_from_json(const json& j);
json to_json(const ModelSpec& spec);

Theta theta_from_json(const ModelSpec& spec, const json& j);
json to_json(const Theta& th);

DiscreteMixture mixture_from_json(const json& j);
json to_json(const DiscreteMixture& m);

json to_json(const VectorXd& v);
VectorXd vector_from_json(const json& j);

json to_json(const RootSet& roots);
json to_json(const IdentifiedSet& set, const ModelSpec& spec);
json to_json(const ThetaMembership& tm);
json to_json(const Feasibility& f);

CsvWriter probs_csv(const PopulationProbs& P);
CsvWriter region_csv(const IdentifiedSet& set, const ModelSpec& spec);
CsvWriter roots_csv(const RootSet& roots, const ModelSpec& spec);

} // namespace panelid::io
