#pragma once

#include <memory>
#include <string>

#include "lane/config.hpp"
#include "lane/model.hpp"

#include <json.hpp>

namespace lane {

struct CheckpointError : Error {
  using Error::Error;
};

// Flat binary container: a JSON manifest (run config, seed, lesson index,
// vocabularies, free-form extras) followed by name -> shape + raw
// little-endian float64 data for every parameter of both stores.
void save_checkpoint(const std::string& path, const Model& m,
                     const nlohmann::json& manifest);

std::unique_ptr<Model> load_checkpoint(const std::string& path,
                                       nlohmann::json* manifest_out = nullptr);

// Manifest skeleton for a run: config, seed, lesson, vocabularies.
nlohmann::json make_manifest(const RunConfig& cfg, const Model& m, int lesson);

}  // namespace lane
