#include "toporag/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "toporag/error.hpp"

namespace toporag {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(Errc::InvalidArgument, std::string(name) + " must lie in [0, 1)");
  }
}

// Row-wise softmax of the scaled similarity matrix minus the identity:
// the derivative of the loss with respect to each logit.
struct LossTerms {
  double loss = 0.0;
  Eigen::MatrixXd dlogits;
};

LossTerms loss_terms(const Eigen::MatrixXd& logits) {
  const Eigen::Index b = logits.rows();
  LossTerms out;
  out.dlogits.resize(b, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const double m = logits.row(k).maxCoeff();
    const Eigen::RowVectorXd shifted = (logits.row(k).array() - m).exp().matrix();
    const double sum = shifted.sum();
    const double lse = m + std::log(sum);
    out.loss += lse - logits(k, k);
    out.dlogits.row(k) = shifted / sum;
    out.dlogits(k, k) -= 1.0;
  }
  return out;
}

Eigen::MatrixXd similarity_logits(const std::vector<Eigen::VectorXd>& z1, const std::vector<Eigen::VectorXd>& z2,
                                  double tau) {
  const auto b = static_cast<Eigen::Index>(z1.size());
  Eigen::MatrixXd logits(b, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    for (Eigen::Index j = 0; j < b; ++j) {
      logits(k, j) = cosine_sim(z1[static_cast<std::size_t>(k)], z2[static_cast<std::size_t>(j)]) / tau;
    }
  }
  return logits;
}

void accumulate_backward(const EncoderModel& model, const ForwardTrace& t, const Eigen::VectorXd& dz,
                         EncoderModel& grads) {
  const Eigen::VectorXd& z = t.embedding;
  const Eigen::VectorXd du = (dz - z * z.dot(dz)) / t.pooled_norm;
  const auto n = t.adjacency.rows();
  Eigen::MatrixXd dh = Eigen::MatrixXd::Ones(n, 1) * (du.transpose() / static_cast<double>(n));
  for (int l = kLayerCount - 1; l >= 0; --l) {
    Eigen::MatrixXd dpre = dh;
    if (l + 1 < kLayerCount) {
      dpre = (t.pre_activation[l].array() > 0.0).select(dh, 0.0);
    }
    grads.weights[l].noalias() += t.aggregated[l].transpose() * dpre;
    grads.biases[l] += dpre.colwise().sum().transpose();
    if (l > 0) {
      dh = t.adjacency * (dpre * model.weights[l].transpose());
    }
  }
}

double mean_batch_loss(const EncoderModel& model, const std::vector<TopologyGraph>& graphs,
                       const std::vector<std::size_t>& order, std::size_t batch_size, const AugmentConfig& aug,
                       const TrainConfig& cfg, Rng& rng) {
  double total = 0.0;
  int batches = 0;
  for (std::size_t start = 0; start + 2 <= order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<TopologyGraph> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(graphs[order[i]]);
    std::vector<Embedding> z1, z2;
    bool degenerate = false;
    for (const TopologyGraph& g : batch) {
      z1.push_back(encode(model, augment(g, aug, rng)));
      z2.push_back(encode(model, augment(g, aug, rng)));
      degenerate = degenerate || z1.back().is_zero() || z2.back().is_zero();
    }
    if (degenerate) continue;
    total += info_nce_loss(z1, z2, cfg.tau) / static_cast<double>(batch.size());
    ++batches;
  }
  return batches == 0 ? std::numeric_limits<double>::infinity() : total / batches;
}

}  // namespace

void AugmentConfig::validate() const {
  check_probability(p_edge, "p_edge");
  check_probability(p_node, "p_node");
}

void TrainConfig::validate() const {
  if (!(tau > 0.0)) throw Error(Errc::NonPositiveTau, "tau must be positive");
  if (batch_size < 2) throw Error(Errc::InvalidArgument, "batch_size must be at least 2");
  if (!(learning_rate > 0.0)) throw Error(Errc::InvalidArgument, "learning_rate must be positive");
  if (max_epochs < 0 || patience < 0) throw Error(Errc::InvalidArgument, "max_epochs and patience must be >= 0");
}

TopologyGraph augment(const TopologyGraph& graph, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (graph.num_nodes() == 0) {
    throw Error(Errc::EmptyGraph, "cannot augment an empty graph");
  }
  std::vector<std::pair<int, int>> kept_edges;
  for (const auto& edge : graph.edges) {
    if (rng.uniform01() >= cfg.p_edge) kept_edges.push_back(edge);
  }
  std::vector<int> kept_nodes;
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    if (rng.uniform01() >= cfg.p_node) kept_nodes.push_back(static_cast<int>(i));
  }
  if (kept_nodes.empty()) {
    kept_nodes.push_back(static_cast<int>(rng.uniform_index(graph.num_nodes())));
  }
  return induced_subgraph(graph, kept_nodes, kept_edges);
}

double info_nce_loss(const std::vector<Eigen::VectorXd>& z1, const std::vector<Eigen::VectorXd>& z2, double tau) {
  if (!(tau > 0.0)) throw Error(Errc::NonPositiveTau, "tau must be positive");
  if (z1.empty() || z1.size() != z2.size()) {
    throw Error(Errc::InvalidArgument, "view lists must be non-empty and equally long");
  }
  return loss_terms(similarity_logits(z1, z2, tau)).loss;
}

double info_nce_loss(const std::vector<Embedding>& z1, const std::vector<Embedding>& z2, double tau) {
  std::vector<Eigen::VectorXd> a, b;
  for (const Embedding& e : z1) a.push_back(e.vector);
  for (const Embedding& e : z2) b.push_back(e.vector);
  return info_nce_loss(a, b, tau);
}

LossAndGradients contrastive_gradients(const EncoderModel& model, const std::vector<TopologyGraph>& view1,
                                       const std::vector<TopologyGraph>& view2, double tau) {
  if (!(tau > 0.0)) throw Error(Errc::NonPositiveTau, "tau must be positive");
  if (view1.empty() || view1.size() != view2.size()) {
    throw Error(Errc::InvalidArgument, "view lists must be non-empty and equally long");
  }
  const std::size_t b = view1.size();
  std::vector<ForwardTrace> t1, t2;
  std::vector<Eigen::VectorXd> z1, z2;
  for (std::size_t k = 0; k < b; ++k) {
    t1.push_back(forward(model, view1[k]));
    t2.push_back(forward(model, view2[k]));
    if (t1.back().pooled_norm < kZeroNormGuard || t2.back().pooled_norm < kZeroNormGuard) {
      throw Error(Errc::DegenerateBatch, "graph \"" + view1[k].case_id + "\" encodes to the zero vector");
    }
    z1.push_back(t1.back().embedding);
    z2.push_back(t2.back().embedding);
  }

  const LossTerms terms = loss_terms(similarity_logits(z1, z2, tau));
  LossAndGradients out{terms.loss, EncoderModel::zeros()};
  for (std::size_t k = 0; k < b; ++k) {
    Eigen::VectorXd dz1 = Eigen::VectorXd::Zero(kEmbeddingDim);
    Eigen::VectorXd dz2 = Eigen::VectorXd::Zero(kEmbeddingDim);
    for (std::size_t j = 0; j < b; ++j) {
      dz1 += terms.dlogits(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * z2[j];
      dz2 += terms.dlogits(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * z1[j];
    }
    accumulate_backward(model, t1[k], dz1 / tau, out.gradients);
    accumulate_backward(model, t2[k], dz2 / tau, out.gradients);
  }
  return out;
}

LossAndGradients loss_gradients(const EncoderModel& model, const std::vector<TopologyGraph>& batch,
                                const AugmentConfig& aug, const TrainConfig& cfg, Rng& rng) {
  if (batch.size() < 2) {
    throw Error(Errc::InvalidArgument, "a contrastive batch needs at least two graphs");
  }
  std::vector<TopologyGraph> view1, view2;
  for (const TopologyGraph& g : batch) {
    view1.push_back(augment(g, aug, rng));
    view2.push_back(augment(g, aug, rng));
  }
  return contrastive_gradients(model, view1, view2, cfg.tau);
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}};
}

std::string TrainResult::log_jsonl() const {
  std::ostringstream out;
  for (const EpochLog& entry : log) out << entry.to_json().dump() << "\n";
  return out.str();
}

TrainResult train(const std::vector<TopologyGraph>& corpus_train, const std::vector<TopologyGraph>& corpus_val,
                  const AugmentConfig& aug, const TrainConfig& cfg) {
  aug.validate();
  cfg.validate();
  if (corpus_train.size() < 2) {
    throw Error(Errc::EmptyCorpus, "training needs at least two graphs");
  }
  const std::size_t batch_size = std::min(cfg.batch_size, corpus_train.size());
  const bool has_val = corpus_val.size() >= 2;
  const std::vector<TopologyGraph>& val_graphs = has_val ? corpus_val : corpus_train;
  std::vector<std::size_t> val_order(val_graphs.size());
  std::iota(val_order.begin(), val_order.end(), 0);

  // Validation views are re-drawn from the same seed each time so that
  // successive epochs are scored on identical augmentations.
  auto validation_loss = [&](const EncoderModel& m) {
    Rng val_rng(derive_seed(cfg.seed, 13));
    return mean_batch_loss(m, val_graphs, val_order, batch_size, aug, cfg, val_rng);
  };

  TrainResult result;
  EncoderModel model = EncoderModel::glorot(derive_seed(cfg.seed, 11));
  result.model = model;
  result.initial_val_loss = validation_loss(model);
  result.best_val_loss = result.initial_val_loss;

  Rng rng(derive_seed(cfg.seed, 12));
  const std::size_t n_params = model.parameter_count();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0);
  long step = 0;
  int stale = 0;

  std::vector<std::size_t> order(corpus_train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double train_total = 0.0;
    int train_batches = 0;
    for (std::size_t start = 0; start + 2 <= order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<TopologyGraph> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(corpus_train[order[i]]);

      LossAndGradients lg;
      try {
        lg = loss_gradients(model, batch, aug, cfg, rng);
      } catch (const Error& e) {
        if (e.code() == Errc::DegenerateBatch) continue;
        throw;
      }
      train_total += lg.loss / static_cast<double>(batch.size());
      ++train_batches;

      ++step;
      std::vector<double> params = model.flatten();
      const std::vector<double> grads = lg.gradients.flatten();
      const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * grads[i];
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        params[i] -= cfg.learning_rate * (m1[i] / bias1) / (std::sqrt(m2[i] / bias2) + cfg.adam_epsilon);
      }
      model.assign(params);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = train_batches == 0 ? std::numeric_limits<double>::infinity() : train_total / train_batches;
    entry.val_loss = validation_loss(model);
    result.log.push_back(entry);

    if (entry.val_loss < result.best_val_loss) {
      result.best_val_loss = entry.val_loss;
      result.best_epoch = epoch;
      result.model = model;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace toporag
