#pragma once

#include <json.hpp>

namespace toporag {

struct DifficultyInputs {
  double s_star = 0.0;  // cosine similarity to the retrieved reference
  int n_nodes = 1;
  int n_edges = 0;
  int max_degree = 0;

  void validate() const;
};

struct Calibration {
  double w_s = 0.5;
  double w_v = 0.2;
  double w_e = 0.2;
  double w_d = 0.1;
  double v_max = 32.0;
  double e_max = 64.0;
  double d_max = 8.0;

  // Throws BadCalibration unless weights are non-negative, sum to one and
  // every cap is positive.
  void validate() const;
};

// Weighted, clamped blend of dissimilarity (1 - s*)/2 and the size
// statistics, each saturated at its cap. Larger is harder.
double difficulty(const DifficultyInputs& inputs, const Calibration& calib = {});

inline constexpr int kMinIterations = 4;
inline constexpr int kMaxIterations = 20;
inline constexpr int kMinTokenCap = 1024;
inline constexpr int kMaxTokenCap = 4096;

struct BudgetEnvelope {
  int token_cap_per_call = kMinTokenCap;
  int max_iterations = kMinIterations;
  double difficulty = 0.0;

  nlohmann::json to_json() const;
};

BudgetEnvelope envelope(double d_q);

}  // namespace toporag
