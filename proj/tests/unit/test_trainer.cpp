#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "toporag/error.hpp"
#include "toporag/synthetic.hpp"
#include "toporag/trainer.hpp"

using namespace toporag;

namespace {

// Direct evaluation of the batch loss with plain sums.
double loss_oracle(const std::vector<Eigen::VectorXd>& z1, const std::vector<Eigen::VectorXd>& z2, double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < z2.size(); ++j) denom += std::exp(cosine_sim(z1[i], z2[j]) / tau);
    loss -= std::log(std::exp(cosine_sim(z1[i], z2[i]) / tau) / denom);
  }
  return loss;
}

Eigen::VectorXd random_vector(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("loss closed forms") {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(kEmbeddingDim).normalized();
  for (double tau : {0.1, 0.2, 1.0}) {
    CHECK(info_nce_loss({v}, {v}, tau) == 0.0);
    CHECK(std::abs(info_nce_loss({v, v}, {v, v}, tau) - 2.0 * std::log(2.0)) < 1e-9);
  }
  CHECK_THROWS_AS(info_nce_loss({v}, {v}, 0.0), Error);
  CHECK_THROWS_AS(info_nce_loss({v}, {v, v}, 0.2), Error);
}

TEST_CASE("loss matches direct summation") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 2 + rng.uniform_index(6);
    std::vector<Eigen::VectorXd> z1, z2;
    for (std::size_t i = 0; i < b; ++i) {
      z1.push_back(random_vector(rng, 8));
      z2.push_back(random_vector(rng, 8));
    }
    const double tau = rng.uniform(0.05, 1.0);
    CHECK(info_nce_loss(z1, z2, tau) == doctest::Approx(loss_oracle(z1, z2, tau)).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(99);
  int checked = 0;
  for (int draw = 0; draw < 20; ++draw) {
    const EncoderModel m = EncoderModel::glorot(500 + draw);
    std::vector<TopologyGraph> v1, v2;
    for (int k = 0; k < 2; ++k) {
      v1.push_back(testutil::random_graph(rng, 3 + static_cast<int>(rng.uniform_index(5)), 0.5));
      v2.push_back(testutil::random_graph(rng, 3 + static_cast<int>(rng.uniform_index(5)), 0.5));
    }
    const double tau = 0.2;
    LossAndGradients lg;
    try {
      lg = contrastive_gradients(m, v1, v2, tau);
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::DegenerateBatch);
      continue;
    }
    const std::vector<double> analytic = lg.gradients.flatten();
    std::vector<double> theta = m.flatten();
    const double eps = 1e-5;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double saved = theta[p];
      EncoderModel probe = m;
      theta[p] = saved + eps;
      probe.assign(theta);
      const double up = contrastive_gradients(probe, v1, v2, tau).loss;
      theta[p] = saved - eps;
      probe.assign(theta);
      const double down = contrastive_gradients(probe, v1, v2, tau).loss;
      theta[p] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double diff = std::abs(fd - analytic[p]);
      const bool ok = diff <= 1e-7 || diff <= 1e-4 * std::max(std::abs(fd), std::abs(analytic[p]));
      if (!ok) FAIL_CHECK("param " << p << " analytic " << analytic[p] << " fd " << fd);
    }
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("augmentation keeps at least one node and only drops structure") {
  Rng rng(12);
  const AugmentConfig aug{0.5, 0.5, 0};
  for (int trial = 0; trial < 200; ++trial) {
    const TopologyGraph g = testutil::random_graph(rng, 1 + static_cast<int>(rng.uniform_index(8)), 0.5);
    const TopologyGraph a = augment(g, aug, rng);
    CHECK(a.num_nodes() >= 1);
    CHECK(a.num_nodes() <= g.num_nodes());
    CHECK(a.num_edges() <= g.num_edges());
    for (const auto& [u, v] : a.edges) {
      CHECK(u < v);
      CHECK(v < static_cast<int>(a.num_nodes()));
    }
  }
  const AugmentConfig none{0.0, 0.0, 0};
  const TopologyGraph g = testutil::random_graph(rng, 6, 0.5);
  const TopologyGraph same = augment(g, none, rng);
  CHECK(same.edges == g.edges);
  CHECK(same.features == g.features);
  CHECK_THROWS_AS((AugmentConfig{1.5, 0.0, 0}.validate()), Error);
}

TEST_CASE("training is deterministic and never worsens the best validation loss") {
  std::vector<TopologyGraph> train_set, val_set;
  for (const auto& c : make_family_corpus(24, 3, "tr")) train_set.push_back(build_graph(c.doc));
  for (const auto& c : make_family_corpus(6, 4, "va")) val_set.push_back(build_graph(c.doc));
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.batch_size = 8;
  cfg.seed = 17;
  const AugmentConfig aug{0.2, 0.1, 17};
  const TrainResult a = train(train_set, val_set, aug, cfg);
  const TrainResult b = train(train_set, val_set, aug, cfg);
  CHECK(a.model.serialize() == b.model.serialize());
  CHECK(a.log_jsonl() == b.log_jsonl());
  CHECK(a.best_val_loss <= a.initial_val_loss);
  CHECK(a.log.size() <= 6);
  CHECK(a.best_epoch >= 0);

  cfg.tau = -1.0;
  CHECK_THROWS_AS(train(train_set, val_set, aug, cfg), Error);
  cfg.tau = 0.2;
  CHECK_THROWS_AS(train({}, val_set, aug, cfg), Error);
}
