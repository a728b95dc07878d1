#include "airobject/model_config.hpp"

#include <string>

#include "airobject/errors.hpp"

namespace airobject {

void validate(const ModelConfig& c) {
  if (c.D_p < 1 || c.D_m < 1 || c.D_o < 1 || c.mlp_hidden < 1 || c.gat_heads < 1 || c.D_g < 0) {
    throw ConfigError("model: dimensions and gat_heads must be >= 1");
  }
  if (c.gat_width() > c.D_o) {
    throw ConfigError("model: GAT width " + std::to_string(c.gat_width()) + " exceeds D_o " +
                      std::to_string(c.D_o));
  }
  if (!(c.leaky_slope >= 0.0 && c.leaky_slope < 1.0)) throw ConfigError("model: leaky_slope must be in [0, 1)");
}

}  // namespace airobject
