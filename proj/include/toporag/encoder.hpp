#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "toporag/topo_model.hpp"

namespace toporag {

inline constexpr int kHiddenDim = 32;
inline constexpr int kEmbeddingDim = 32;
inline constexpr int kLayerCount = 3;
inline constexpr int kModelFormatVersion = 1;

// Weights of the three graph-convolution layers: 4x32, 32x32, 32x32.
// Also used as the gradient container during training.
struct EncoderModel {
  std::array<Eigen::MatrixXd, kLayerCount> weights;
  std::array<Eigen::VectorXd, kLayerCount> biases;

  static EncoderModel zeros();
  // Uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static EncoderModel glorot(std::uint64_t seed);

  static std::array<int, kLayerCount + 1> dims() { return {kFeatureDim, kHiddenDim, kHiddenDim, kEmbeddingDim}; }

  // Throws InvalidArgument on wrong shapes or non-finite entries.
  void validate() const;

  std::size_t parameter_count() const;
  // Order: W1 row-major, b1, W2, b2, W3, b3.
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);

  nlohmann::json to_json() const;
  static EncoderModel from_json(const nlohmann::json& j);
  // Exact bytes written to a model file.
  std::string serialize() const;
  // Content hash of serialize(); equals the hash of the saved file.
  std::string fingerprint() const;
};

void save_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);

struct Embedding {
  std::string case_id;
  Eigen::VectorXd vector;

  bool is_zero() const;
};

inline constexpr double kZeroNormGuard = 1e-12;

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Eigen::MatrixXd normalized_adjacency(const TopologyGraph& graph);

// Every intermediate of one forward pass, kept for backpropagation.
struct ForwardTrace {
  Eigen::MatrixXd adjacency;
  std::array<Eigen::MatrixXd, kLayerCount> layer_input;  // H^{l-1}
  std::array<Eigen::MatrixXd, kLayerCount> aggregated;   // A_hat H^{l-1}
  std::array<Eigen::MatrixXd, kLayerCount> pre_activation;
  std::array<Eigen::MatrixXd, kLayerCount> output;       // H^l
  Eigen::VectorXd pooled;
  double pooled_norm = 0.0;
  Eigen::VectorXd embedding;  // zero when pooled_norm < kZeroNormGuard
};

ForwardTrace forward(const EncoderModel& model, const TopologyGraph& graph);
Embedding encode(const EncoderModel& model, const TopologyGraph& graph);

double cosine_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
inline double cosine_sim(const Embedding& a, const Embedding& b) { return cosine_sim(a.vector, b.vector); }

}  // namespace toporag
