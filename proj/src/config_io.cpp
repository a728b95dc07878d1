#include "airobject/config_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace airobject {

namespace {

using Setter = std::function<void(const nlohmann::json&)>;

// Dispatches every key of `j` to its setter; anything unknown or of the
// wrong type is reported with the section name.
void apply_fields(const nlohmann::json& j, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: key '" + section + "." + key + "' has the wrong type");
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const nlohmann::json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw nlohmann::json::type_error::create(302, "bool expected", nullptr);
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw nlohmann::json::type_error::create(302, "integer expected", nullptr);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw nlohmann::json::type_error::create(302, "number expected", nullptr);
    }
    field = v.get<T>();
  };
}

std::string selector_name(UniqueSelector s) { return s == UniqueSelector::Location ? "location" : "content"; }

UniqueSelector parse_selector(const std::string& s) {
  if (s == "location") return UniqueSelector::Location;
  if (s == "content") return UniqueSelector::Content;
  throw ConfigError("config: unique_selector must be 'location' or 'content', got '" + s + "'");
}

}  // namespace

nlohmann::ordered_json to_json(const SynthConfig& c) {
  return {{"num_objects", c.num_objects},
          {"videos", c.videos},
          {"objects_per_video", c.objects_per_video},
          {"frames_per_track", c.frames_per_track},
          {"keypoints_min", c.keypoints_min},
          {"keypoints_max", c.keypoints_max},
          {"descriptor_dim", c.descriptor_dim},
          {"object_radius", c.object_radius},
          {"position_jitter_sigma", c.position_jitter_sigma},
          {"descriptor_noise_sigma", c.descriptor_noise_sigma},
          {"dropout_rate", c.dropout_rate},
          {"spurious_rate", c.spurious_rate},
          {"rotation_max_deg", c.rotation_max_deg},
          {"scale_min", c.scale_min},
          {"scale_max", c.scale_max},
          {"translation_min_x", c.translation_min_x},
          {"translation_max_x", c.translation_max_x},
          {"translation_min_y", c.translation_min_y},
          {"translation_max_y", c.translation_max_y},
          {"seed", c.seed}};
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  return {{"D_p", c.D_p},
          {"D_m", c.D_m},
          {"D_g", c.D_g},
          {"D_o", c.D_o},
          {"mlp_hidden", c.mlp_hidden},
          {"gat_heads", c.gat_heads},
          {"leaky_slope", c.leaky_slope},
          {"fully_connected", c.fully_connected}};
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"lr", c.lr},         {"s_l_max", c.s_l_max},
          {"delta", c.delta},           {"lambda_margin", c.lambda_margin},
          {"w_s", c.w_s},               {"w_d", c.w_d},       {"w_m", c.w_m},
          {"epochs", c.epochs},         {"stage2_epochs", c.stage2_epochs},
          {"seed", c.seed}};
}

nlohmann::ordered_json to_json(const EvalConfig& c) {
  nlohmann::ordered_json j;
  j["rho"] = c.rho;
  // The default grid is stored by size; anything else verbatim.
  const auto def = default_grid();
  if (c.grid == def) {
    j["grid_points"] = def.size();
  } else {
    j["grid"] = c.grid;
  }
  j["seq_len"] = c.seq_len ? nlohmann::ordered_json(*c.seq_len) : nlohmann::ordered_json(nullptr);
  j["unique_features"] = c.unique_features;
  j["unique_selector"] = selector_name(c.unique_selector);
  j["unique_threshold"] = c.unique_threshold;
  j["baseline"] = baseline_name(c.baseline);
  j["best_match"] = c.best_match;
  j["threads"] = c.threads;
  return j;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  return {{"synth", to_json(c.synth)}, {"model", to_json(c.model)}, {"train", to_json(c.train)}, {"eval", to_json(c.eval)}};
}

void apply_json(const nlohmann::json& j, SynthConfig& c) {
  apply_fields(j, "synth",
               {{"num_objects", set(c.num_objects)},
                {"videos", set(c.videos)},
                {"objects_per_video", set(c.objects_per_video)},
                {"frames_per_track", set(c.frames_per_track)},
                {"keypoints_min", set(c.keypoints_min)},
                {"keypoints_max", set(c.keypoints_max)},
                {"descriptor_dim", set(c.descriptor_dim)},
                {"object_radius", set(c.object_radius)},
                {"position_jitter_sigma", set(c.position_jitter_sigma)},
                {"descriptor_noise_sigma", set(c.descriptor_noise_sigma)},
                {"dropout_rate", set(c.dropout_rate)},
                {"spurious_rate", set(c.spurious_rate)},
                {"rotation_max_deg", set(c.rotation_max_deg)},
                {"scale_min", set(c.scale_min)},
                {"scale_max", set(c.scale_max)},
                {"translation_min_x", set(c.translation_min_x)},
                {"translation_max_x", set(c.translation_max_x)},
                {"translation_min_y", set(c.translation_min_y)},
                {"translation_max_y", set(c.translation_max_y)},
                {"seed", set(c.seed)}});
}

void apply_json(const nlohmann::json& j, ModelConfig& c) {
  apply_fields(j, "model",
               {{"D_p", set(c.D_p)},
                {"D_m", set(c.D_m)},
                {"D_g", set(c.D_g)},
                {"D_o", set(c.D_o)},
                {"mlp_hidden", set(c.mlp_hidden)},
                {"gat_heads", set(c.gat_heads)},
                {"leaky_slope", set(c.leaky_slope)},
                {"fully_connected", set(c.fully_connected)}});
}

void apply_json(const nlohmann::json& j, TrainConfig& c) {
  apply_fields(j, "train",
               {{"batch_size", set(c.batch_size)},
                {"lr", set(c.lr)},
                {"s_l_max", set(c.s_l_max)},
                {"delta", set(c.delta)},
                {"lambda_margin", set(c.lambda_margin)},
                {"w_s", set(c.w_s)},
                {"w_d", set(c.w_d)},
                {"w_m", set(c.w_m)},
                {"epochs", set(c.epochs)},
                {"stage2_epochs", set(c.stage2_epochs)},
                {"seed", set(c.seed)}});
}

void apply_json(const nlohmann::json& j, EvalConfig& c) {
  apply_fields(j, "eval",
               {{"rho", set(c.rho)},
                {"grid_points",
                 [&c](const nlohmann::json& v) {
                   const int n = v.get<int>();
                   if (n < 2) throw ConfigError("config: eval.grid_points must be >= 2");
                   c.grid.resize(static_cast<std::size_t>(n));
                   for (int i = 0; i < n; ++i) c.grid[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (n - 1);
                 }},
                {"grid", [&c](const nlohmann::json& v) { c.grid = v.get<std::vector<double>>(); }},
                {"seq_len",
                 [&c](const nlohmann::json& v) {
                   if (v.is_null()) {
                     c.seq_len.reset();
                   } else {
                     c.seq_len = v.get<int>();
                   }
                 }},
                {"unique_features", set(c.unique_features)},
                {"unique_selector", [&c](const nlohmann::json& v) { c.unique_selector = parse_selector(v.get<std::string>()); }},
                {"unique_threshold", set(c.unique_threshold)},
                {"baseline", [&c](const nlohmann::json& v) { c.baseline = parse_baseline(v.get<std::string>()); }},
                {"best_match", set(c.best_match)},
                {"threads", set(c.threads)}});
}

void apply_json(const nlohmann::json& j, RunConfig& c) {
  apply_fields(j, "config",
               {{"synth", [&c](const nlohmann::json& v) { apply_json(v, c.synth); }},
                {"model", [&c](const nlohmann::json& v) { apply_json(v, c.model); }},
                {"train", [&c](const nlohmann::json& v) { apply_json(v, c.train); }},
                {"eval", [&c](const nlohmann::json& v) { apply_json(v, c.eval); }}});
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file not found: " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunConfig c;
  apply_json(j, c);
  return c;
}

}  // namespace airobject
