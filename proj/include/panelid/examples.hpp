#pragma once

#include "panelid/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace panelid {

struct ExampleCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExampleRun {
  std::string id;
  std::vector<ExampleCheck> checks;
  double seconds = 0.0; // wall time of the identification work
  io::json report;

  bool all_pass() const;
};

/// Runs a bundled worked example, writes its artifacts into out_dir (when non-empty)
/// and compares against the reference values.
ExampleRun run_example(const std::string& id, const std::filesystem::path& out_dir);

} // namespace panelid
