#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgr/trainer.hpp"

namespace mgr {

/// Effective settings of one CLI run: training keys plus file locations.
/// Precedence is command line > config file > defaults.
struct RunConfig {
  TrainConfig train;
  std::string train_manifest;
  std::string val_manifest;
  std::string test_manifest;
  std::string checkpoint;
  std::string report;
  std::string out = ".";

  nlohmann::json to_json() const;
  /// Overlays a config file object. Path keys are read here; every other key
  /// goes to the training config.
  void apply_file(const nlohmann::json& j);
};

/// Subcommands: gen-synth, train, eval, predict, inspect-graph.
/// Returns the process exit code; 0 iff every declared output was written.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace mgr
