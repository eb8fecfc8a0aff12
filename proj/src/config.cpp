#include "lane/config.hpp"

#include <fstream>
#include <sstream>

namespace lane {

void RunConfig::validate() const {
  std::string problems;
  auto bad = [&](const std::string& msg) { problems += "  - " + msg + "\n"; };
  if (dim < 1) bad("dim must be positive");
  if (pool_size < 1) bad("pool_size must be positive");
  if (max_steps < 1) bad("max_steps must be positive");
  if (skeleton_cap < 1) bad("skeleton_cap must be positive");
  if (gamma < 0) bad("gamma must be nonnegative");
  if (samples < 1) bad("samples must be at least 1");
  if (entropy_weight < 0) bad("entropy_weight must be nonnegative");
  if (entropy_anneal <= 0 || entropy_anneal > 1) {
    bad("entropy_anneal must be in (0, 1]");
  }
  if (lr_theta <= 0 || lr_phi <= 0) bad("learning rates must be positive");
  if (adadelta_rho <= 0 || adadelta_rho >= 1) bad("adadelta_rho must be in (0,1)");
  if (adadelta_eps <= 0) bad("adadelta_eps must be positive");
  if (epoch_cap < 1) bad("epoch_cap must be at least 1");
  if (advance_accuracy <= 0 || advance_accuracy > 1) {
    bad("advance_accuracy must be in (0, 1]");
  }
  for (std::size_t i = 1; i < lesson_lengths.size(); ++i) {
    if (lesson_lengths[i] <= lesson_lengths[i - 1]) {
      bad("lesson_lengths must be strictly increasing");
      break;
    }
  }
  if (!problems.empty()) {
    throw ConfigError("invalid configuration:\n" + problems);
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["dim"] = dim;
  j["pool_size"] = pool_size;
  j["max_steps"] = max_steps;
  j["skeleton_cap"] = skeleton_cap;
  j["gamma"] = gamma;
  j["samples"] = samples;
  j["entropy_weight"] = entropy_weight;
  j["entropy_anneal"] = entropy_anneal;
  j["lr_theta"] = lr_theta;
  j["lr_phi"] = lr_phi;
  j["adadelta_rho"] = adadelta_rho;
  j["adadelta_eps"] = adadelta_eps;
  j["epoch_cap"] = epoch_cap;
  j["advance_accuracy"] = advance_accuracy;
  j["lesson_lengths"] = lesson_lengths;
  j["curriculum"] = curriculum;
  j["and_lessons"] = and_lessons;
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.task = j.at("task").get<std::string>();
  c.dim = j.at("dim").get<int>();
  c.pool_size = j.at("pool_size").get<int>();
  c.max_steps = j.at("max_steps").get<int>();
  c.skeleton_cap = j.at("skeleton_cap").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.samples = j.at("samples").get<int>();
  c.entropy_weight = j.at("entropy_weight").get<double>();
  c.entropy_anneal = j.at("entropy_anneal").get<double>();
  c.lr_theta = j.at("lr_theta").get<double>();
  c.lr_phi = j.at("lr_phi").get<double>();
  c.adadelta_rho = j.at("adadelta_rho").get<double>();
  c.adadelta_eps = j.at("adadelta_eps").get<double>();
  c.epoch_cap = j.at("epoch_cap").get<int>();
  c.advance_accuracy = j.at("advance_accuracy").get<double>();
  c.lesson_lengths = j.at("lesson_lengths").get<std::vector<int>>();
  c.curriculum = j.at("curriculum").get<bool>();
  c.and_lessons = j.at("and_lessons").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "task") task = val;
      else if (key == "dim") dim = std::stoi(val);
      else if (key == "pool_size") pool_size = std::stoi(val);
      else if (key == "max_steps") max_steps = std::stoi(val);
      else if (key == "skeleton_cap") skeleton_cap = std::stoi(val);
      else if (key == "gamma") gamma = std::stod(val);
      else if (key == "samples") samples = std::stoi(val);
      else if (key == "entropy_weight") entropy_weight = std::stod(val);
      else if (key == "entropy_anneal") entropy_anneal = std::stod(val);
      else if (key == "lr_theta") lr_theta = std::stod(val);
      else if (key == "lr_phi") lr_phi = std::stod(val);
      else if (key == "adadelta_rho") adadelta_rho = std::stod(val);
      else if (key == "adadelta_eps") adadelta_eps = std::stod(val);
      else if (key == "epoch_cap") epoch_cap = std::stoi(val);
      else if (key == "advance_accuracy") advance_accuracy = std::stod(val);
      else if (key == "curriculum") curriculum = (val == "true" || val == "1");
      else if (key == "and_lessons") and_lessons = (val == "true" || val == "1");
      else if (key == "seed") seed = std::stoull(val);
      else if (key == "lesson_lengths") {
        lesson_lengths.clear();
        std::istringstream is(val);
        std::string item;
        while (std::getline(is, item, ',')) {
          lesson_lengths.push_back(std::stoi(item));
        }
      } else {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": bad value for '" + key + "': " + val);
    }
  }
}

}  // namespace lane
