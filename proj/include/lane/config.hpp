#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lane/model.hpp"

#include <json.hpp>

namespace lane {

struct ConfigError : Error {
  using Error::Error;
};

// Everything a training run needs; serialized into run manifests and
// checkpoints so a run can be reproduced from its manifest alone.
struct RunConfig {
  std::string task = "simple";
  int dim = 128;
  int pool_size = 3;
  int max_steps = 20;
  int skeleton_cap = 16;
  double gamma = 0.5;           // simplicity reward weight
  int samples = 10;             // rollouts per example (N)
  double entropy_weight = 0.1;  // initial regularizer weight
  double entropy_anneal = 0.5;  // per-lesson decay factor
  double lr_theta = 0.1;
  double lr_phi = 1.0;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  int epoch_cap = 30;             // epochs per lesson before moving on
  double advance_accuracy = 0.995;
  std::vector<int> lesson_lengths = {2, 4, 6, 8};
  bool curriculum = true;
  bool and_lessons = false;  // append lessons by "and" count (extended set)
  std::uint64_t seed = 1;

  ModelConfig model_config() const {
    return {dim, pool_size, max_steps, skeleton_cap};
  }

  void validate() const;  // throws ConfigError listing every problem

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  // key = value lines; '#' starts a comment. Unknown keys are an error.
  void apply_file(const std::string& path);
};

}  // namespace lane
