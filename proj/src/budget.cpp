#include "toporag/budget.hpp"

#include <algorithm>
#include <cmath>

#include "toporag/error.hpp"

namespace toporag {

void DifficultyInputs::validate() const {
  if (!(s_star >= -1.0 && s_star <= 1.0)) throw Error(Errc::InvalidArgument, "s* must lie in [-1, 1]");
  if (n_nodes < 1) throw Error(Errc::InvalidArgument, "difficulty needs at least one node");
  if (n_edges < 0) throw Error(Errc::InvalidArgument, "edge count must be non-negative");
  if (max_degree < 0 || max_degree > n_nodes - 1) {
    throw Error(Errc::InvalidArgument, "max degree must lie in [0, n_nodes - 1]");
  }
}

void Calibration::validate() const {
  for (double w : {w_s, w_v, w_e, w_d}) {
    if (!(w >= 0.0)) throw Error(Errc::BadCalibration, "weights must be non-negative");
  }
  if (std::abs(w_s + w_v + w_e + w_d - 1.0) > 1e-9) {
    throw Error(Errc::BadCalibration, "weights must sum to 1");
  }
  for (double cap : {v_max, e_max, d_max}) {
    if (!(cap > 0.0)) throw Error(Errc::BadCalibration, "caps must be positive");
  }
}

double difficulty(const DifficultyInputs& inputs, const Calibration& calib) {
  calib.validate();
  inputs.validate();
  const double dissimilarity = (1.0 - inputs.s_star) / 2.0;
  const double d = calib.w_s * dissimilarity + calib.w_v * std::min(inputs.n_nodes / calib.v_max, 1.0) +
                   calib.w_e * std::min(inputs.n_edges / calib.e_max, 1.0) +
                   calib.w_d * std::min(inputs.max_degree / calib.d_max, 1.0);
  return std::clamp(d, 0.0, 1.0);
}

nlohmann::json BudgetEnvelope::to_json() const {
  return {{"token_cap_per_call", token_cap_per_call}, {"max_iterations", max_iterations}, {"difficulty", difficulty}};
}

BudgetEnvelope envelope(double d_q) {
  if (!(d_q >= 0.0 && d_q <= 1.0)) throw Error(Errc::InvalidArgument, "difficulty must lie in [0, 1]");
  BudgetEnvelope env;
  env.difficulty = d_q;
  env.max_iterations = static_cast<int>(std::lround(kMinIterations + (kMaxIterations - kMinIterations) * d_q));
  env.token_cap_per_call = static_cast<int>(std::lround(kMinTokenCap + (kMaxTokenCap - kMinTokenCap) * d_q));
  return env;
}

}  // namespace toporag
