#include "toporag/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/rng.hpp"

namespace toporag {

EncoderModel EncoderModel::zeros() {
  EncoderModel model;
  const auto d = dims();
  for (int l = 0; l < kLayerCount; ++l) {
    model.weights[l] = Eigen::MatrixXd::Zero(d[l], d[l + 1]);
    model.biases[l] = Eigen::VectorXd::Zero(d[l + 1]);
  }
  return model;
}

EncoderModel EncoderModel::glorot(std::uint64_t seed) {
  EncoderModel model = zeros();
  Rng rng(seed);
  for (int l = 0; l < kLayerCount; ++l) {
    Eigen::MatrixXd& w = model.weights[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
  }
  return model;
}

void EncoderModel::validate() const {
  const auto d = dims();
  for (int l = 0; l < kLayerCount; ++l) {
    if (weights[l].rows() != d[l] || weights[l].cols() != d[l + 1] || biases[l].size() != d[l + 1]) {
      throw Error(Errc::InvalidArgument, "layer " + std::to_string(l + 1) + " has wrong dimensions");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw Error(Errc::InvalidArgument, "layer " + std::to_string(l + 1) + " has non-finite entries");
    }
  }
}

std::size_t EncoderModel::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < kLayerCount; ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

std::vector<double> EncoderModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (int l = 0; l < kLayerCount; ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) flat.push_back(weights[l](r, c));
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat.push_back(biases[l](i));
  }
  return flat;
}

void EncoderModel::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) {
    throw Error(Errc::InvalidArgument, "parameter vector has wrong length");
  }
  std::size_t k = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = flat[k++];
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l](i) = flat[k++];
  }
}

nlohmann::json EncoderModel::to_json() const {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["dims"] = dims();
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (int l = 0; l < kLayerCount; ++l) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weights[l].size()));
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) w.push_back(weights[l](r, c));
    }
    j["weights"].push_back(w);
    j["biases"].push_back(std::vector<double>(biases[l].data(), biases[l].data() + biases[l].size()));
  }
  return j;
}

EncoderModel EncoderModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(Errc::MalformedJson, "unsupported model format_version");
    }
    if (j.at("dims").get<std::vector<int>>() != std::vector<int>{kFeatureDim, kHiddenDim, kHiddenDim, kEmbeddingDim}) {
      throw Error(Errc::MalformedJson, "model dims must be [4, 32, 32, 32]");
    }
    EncoderModel model = zeros();
    for (int l = 0; l < kLayerCount; ++l) {
      const auto w = j.at("weights").at(static_cast<std::size_t>(l)).get<std::vector<double>>();
      const auto b = j.at("biases").at(static_cast<std::size_t>(l)).get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(model.weights[l].size()) ||
          b.size() != static_cast<std::size_t>(model.biases[l].size())) {
        throw Error(Errc::MalformedJson, "layer " + std::to_string(l + 1) + " has the wrong number of values");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) model.weights[l](r, c) = w[k++];
      }
      for (std::size_t i = 0; i < b.size(); ++i) model.biases[l](static_cast<Eigen::Index>(i)) = b[i];
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("model file: ") + e.what());
  }
}

std::string EncoderModel::serialize() const { return dump_json(to_json()); }

std::string EncoderModel::fingerprint() const { return sha256_hex(serialize()); }

void save_model(const EncoderModel& model, const std::filesystem::path& path) {
  write_text_file(path, model.serialize());
}

EncoderModel load_model(const std::filesystem::path& path) { return EncoderModel::from_json(read_json_file(path)); }

bool Embedding::is_zero() const { return vector.size() == 0 || vector.norm() < kZeroNormGuard; }

Eigen::MatrixXd normalized_adjacency(const TopologyGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [u, v] : graph.edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  const Eigen::VectorXd inv_sqrt_degree = a.rowwise().sum().array().rsqrt();
  return inv_sqrt_degree.asDiagonal() * a * inv_sqrt_degree.asDiagonal();
}

ForwardTrace forward(const EncoderModel& model, const TopologyGraph& graph) {
  if (graph.num_nodes() == 0) {
    throw Error(Errc::EmptyGraph, "cannot encode graph \"" + graph.case_id + "\" with no nodes");
  }
  ForwardTrace t;
  t.adjacency = normalized_adjacency(graph);
  Eigen::MatrixXd h = graph.features;
  for (int l = 0; l < kLayerCount; ++l) {
    t.layer_input[l] = h;
    t.aggregated[l] = t.adjacency * h;
    t.pre_activation[l] = t.aggregated[l] * model.weights[l];
    t.pre_activation[l].rowwise() += model.biases[l].transpose();
    if (l + 1 < kLayerCount) {
      t.output[l] = t.pre_activation[l].cwiseMax(0.0);
    } else {
      t.output[l] = t.pre_activation[l];
    }
    h = t.output[l];
  }
  t.pooled = h.colwise().mean().transpose();
  t.pooled_norm = t.pooled.norm();
  if (t.pooled_norm < kZeroNormGuard) {
    t.embedding = Eigen::VectorXd::Zero(kEmbeddingDim);
  } else {
    t.embedding = t.pooled / t.pooled_norm;
  }
  return t;
}

Embedding encode(const EncoderModel& model, const TopologyGraph& graph) {
  return Embedding{graph.case_id, forward(model, graph).embedding};
}

double cosine_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::InvalidArgument, "embedding dimensions differ");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kZeroNormGuard || nb < kZeroNormGuard) {
    throw Error(Errc::ZeroVector, "cosine similarity of a zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace toporag
