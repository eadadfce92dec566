#pragma once

#include <string>

#include "esmc/evaluation.hpp"
#include "esmc/simulator.hpp"
#include "esmc/trainer.hpp"

namespace esmc {

// Declarative run configuration: `[section]` headers with `key = value`
// lines, '#' comments. Unknown sections or keys are rejected. Sections:
// simulator, schema, model, weights, training, evaluation, paths.
struct RunConfig {
  SimulatorConfig simulator;

  // schema comes from a file, from inline `fields`, or (fallback) from the
  // simulator geometry
  std::string schema_file;
  FeatureSchema inline_schema;
  bool has_inline_schema = false;

  TrainConfig training;
  TiePolicy tie = TiePolicy::TieAware;

  double split_fraction = 0.8;
  long split_boundary = -1;  // < 0: derive from split_fraction
  bool calibrate_samples = true;

  std::string out_dir = "out";
  std::string dataset_path;
  std::string checkpoint_path;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text, const std::string& origin = "<config>");

  // One `section.key=value` assignment (command-line override).
  void set(const std::string& dotted_key, const std::string& value);

  // Fully-resolved echo in the same grammar; reparses to an equal config.
  std::string to_text() const;

  // Resolve the feature schema according to the precedence above.
  FeatureSchema resolve_schema() const;
};

}  // namespace esmc
