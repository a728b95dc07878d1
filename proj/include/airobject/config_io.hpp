#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "airobject/evaluation.hpp"
#include "airobject/features.hpp"
#include "airobject/model_config.hpp"
#include "airobject/training.hpp"

namespace airobject {

/// Everything a pipeline run can be configured with. On disk it is one JSON
/// object with optional "synth", "model", "train" and "eval" sections; an
/// omitted key keeps its default and an unknown key is a ConfigError.
struct RunConfig {
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
};

nlohmann::ordered_json to_json(const SynthConfig& c);
nlohmann::ordered_json to_json(const ModelConfig& c);
nlohmann::ordered_json to_json(const TrainConfig& c);
nlohmann::ordered_json to_json(const EvalConfig& c);
nlohmann::ordered_json to_json(const RunConfig& c);

/// Overlays the keys present in `j` onto `c`.
void apply_json(const nlohmann::json& j, SynthConfig& c);
void apply_json(const nlohmann::json& j, ModelConfig& c);
void apply_json(const nlohmann::json& j, TrainConfig& c);
void apply_json(const nlohmann::json& j, EvalConfig& c);
void apply_json(const nlohmann::json& j, RunConfig& c);

/// Reads a RunConfig file over the defaults. A missing file is a UsageError,
/// malformed JSON a ParseError.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace airobject
