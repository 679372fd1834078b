#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "toporag/encoder.hpp"
#include "toporag/rng.hpp"
#include "toporag/topo_model.hpp"

namespace toporag {

struct AugmentConfig {
  double p_edge = 0.2;
  double p_node = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainConfig {
  double tau = 0.2;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

// Drops each edge with probability p_edge, then each node with p_node
// (taking incident edges with it). At least one node always survives.
TopologyGraph augment(const TopologyGraph& graph, const AugmentConfig& cfg, Rng& rng);

// Contrastive loss with view-1 anchors and in-batch view-2 negatives,
// evaluated with max-subtracted log-sum-exp.
double info_nce_loss(const std::vector<Eigen::VectorXd>& z1, const std::vector<Eigen::VectorXd>& z2, double tau);
double info_nce_loss(const std::vector<Embedding>& z1, const std::vector<Embedding>& z2, double tau);

struct LossAndGradients {
  double loss = 0.0;
  EncoderModel gradients;
};

// Loss and exact gradients for fixed views (view1[k] pairs with view2[k]).
LossAndGradients contrastive_gradients(const EncoderModel& model, const std::vector<TopologyGraph>& view1,
                                       const std::vector<TopologyGraph>& view2, double tau);

// Samples two views per graph from `rng`, then defers to contrastive_gradients.
LossAndGradients loss_gradients(const EncoderModel& model, const std::vector<TopologyGraph>& batch,
                                const AugmentConfig& aug, const TrainConfig& cfg, Rng& rng);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  EncoderModel model;  // best-validation weights
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<EpochLog> log;

  // One JSON object per line: {"epoch", "train_loss", "val_loss"}.
  std::string log_jsonl() const;
};

TrainResult train(const std::vector<TopologyGraph>& corpus_train, const std::vector<TopologyGraph>& corpus_val,
                  const AugmentConfig& aug, const TrainConfig& cfg);

}  // namespace toporag
