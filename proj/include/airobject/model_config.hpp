#pragma once

namespace airobject {

struct ModelConfig {
  int D_p = 256;  // point descriptor width
  int D_m = 16;   // position embedding width
  int D_g = 0;    // GAT output width; 0 means D_n
  int D_o = 2048; // object descriptor width
  int mlp_hidden = 32;
  int gat_heads = 1;
  double leaky_slope = 0.2;
  bool fully_connected = false;

  int D_n() const { return D_p + D_m; }
  int gat_width() const { return D_g > 0 ? D_g : D_n(); }
};

/// Throws ConfigError if a dimension is < 1 or D_g > D_o.
void validate(const ModelConfig& config);

}  // namespace airobject
