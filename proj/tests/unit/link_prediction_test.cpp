#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "support.hpp"
#include "wkw/error.hpp"
#include "wkw/link_prediction.hpp"

using namespace wkw;

namespace {

DistMultParams random_params(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DistMultParams p;
  p.dim = dim;
  p.entities.resize(n * dim);
  p.relations.resize(kRelationTypes.size() * dim);
  for (double& x : p.entities) x = u(rng);
  for (double& x : p.relations) x = u(rng);
  return p;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(DistMult, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4, dim = 3;
    DistMultParams p = random_params(n, dim, rng);
    std::vector<Sample> samples;
    std::uniform_int_distribution<std::uint32_t> ent(0, n - 1), rel(0, 4);
    for (int i = 0; i < 1 + trial % 4; ++i) samples.push_back({ent(rng), rel(rng), ent(rng), static_cast<double>(i % 2)});

    DistMultParams grad;
    loss_and_gradient(p, samples, &grad);
    const double h = 1e-5;
    auto check = [&](std::vector<double>& block, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < block.size(); ++i) {
        const double keep = block[i];
        block[i] = keep + h;
        const double up = loss_and_gradient(p, samples, nullptr);
        block[i] = keep - h;
        const double down = loss_and_gradient(p, samples, nullptr);
        block[i] = keep;
        const double numeric = (up - down) / (2 * h);
        if (std::abs(numeric) < 1e-7 && std::abs(analytic[i]) < 1e-7) continue;
        EXPECT_LT(relative_error(numeric, analytic[i]), 1e-4) << "trial " << trial << " index " << i;
      }
    };
    check(p.entities, grad.entities);
    check(p.relations, grad.relations);
  }
}

TEST(DistMult, ScoreIsSymmetric) {
  std::mt19937_64 rng(9);
  DistMultParams p = random_params(10, 16, rng);
  for (std::uint32_t h = 0; h < 10; ++h)
    for (std::uint32_t t = 0; t < 10; ++t)
      for (std::uint32_t r = 0; r < 5; ++r) EXPECT_EQ(p.score(h, r, t), p.score(t, r, h));
}

TEST(DistMult, TrainingLowersLossAndIsSeeded) {
  auto m = wkw::testing::block_model(4, 5, 0.8, 0.0, 3);
  DistMultConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 60;
  auto a = train_distmult(m.train, cfg);
  auto b = train_distmult(m.train, cfg);
  ASSERT_EQ(a.loss_history.size(), 60u);
  EXPECT_LT(a.final_loss, a.loss_history.front());
  EXPECT_EQ(a.model.params().entities, b.model.params().entities);
  EXPECT_EQ(a.loss_history, b.loss_history);
  cfg.seed = 43;
  EXPECT_NE(train_distmult(m.train, cfg).model.params().entities, a.model.params().entities);
}

TEST(DistMult, RejectsUnusableInput) {
  KnowledgeGraph empty;
  empty.upsert_entity("Alone", EntityType::Company, "p", 1);
  EXPECT_THROW(train_distmult(empty, {}), TrainingError);
  auto m = wkw::testing::block_model(2, 3, 1.0, 0.0, 1);
  DistMultConfig cfg;
  cfg.dim = 0;
  EXPECT_THROW(train_distmult(m.train, cfg), TrainingError);
  cfg = {};
  cfg.learning_rate = 0;
  EXPECT_THROW(train_distmult(m.train, cfg), TrainingError);
}

TEST(DistMult, TopKSkipsExistingEdgesAndIsOrdered) {
  auto m = wkw::testing::block_model(3, 4, 0.6, 0.0, 2);
  DistMultConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 20;
  auto trained = train_distmult(m.train, cfg);
  auto top = predict_top_k(trained.model, m.train, 15);
  ASSERT_EQ(top.size(), 15u);
  std::set<std::pair<EntityId, EntityId>> existing;
  for (const auto& r : m.train.relations()) existing.insert({r.source, r.target});
  for (std::size_t i = 0; i < top.size(); ++i) {
    EXPECT_EQ(top[i].rank, static_cast<int>(i + 1));
    EXPECT_FALSE(existing.count({top[i].head, top[i].tail}));
    EXPECT_NE(top[i].head, top[i].tail);
    if (i) EXPECT_GE(top[i - 1].score, top[i].score);
  }
}

TEST(DistMult, HeldOutEdgesBeatUniformRanking) {
  auto m = wkw::testing::block_model(12, 6, 0.7, 0.10, 21);
  ASSERT_FALSE(m.held_out.empty());
  DistMultConfig cfg;
  cfg.dim = 32;
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  auto trained = train_distmult(m.train, cfg);
  const std::size_t k = 20;
  auto top = predict_top_k(trained.model, m.train, k);
  std::set<std::pair<std::string, std::string>> held(m.held_out.begin(), m.held_out.end());
  std::size_t hits = 0;
  for (const auto& l : top) hits += held.count({l.head_name, l.tail_name});
  // Uniform ranking over every absent ordered pair draws k of them at random.
  const double candidates = static_cast<double>(m.companies * (m.companies - 1) - m.train_edges);
  const double expected = k * static_cast<double>(held.size()) / candidates;
  EXPECT_GE(static_cast<double>(hits), 3.0 * expected) << hits << " hits vs uniform " << expected;
}

TEST(RetroEval, ConfirmationAndGrowth) {
  KnowledgeGraph g1, g2;
  for (KnowledgeGraph* g : {&g1, &g2})
    for (const char* n : {"Alpha", "Beta", "Gamma"}) g->upsert_entity(n, EntityType::Company, "p", 1);
  auto id = [](const KnowledgeGraph& g, const char* n) { return g.find_normalized(n, EntityType::Company)->id; };
  g2.add_relation({id(g2, "Alpha"), id(g2, "Beta"), RelationType::SuppliesTo, 0.9, "p"});

  IterationPredictions ip;
  ip.iteration = 1;
  ip.final_loss = 0.5;
  ip.links = {{id(g1, "Alpha"), id(g1, "Beta"), "alpha", "beta", 1.0, 1},
              {id(g1, "Gamma"), id(g1, "Alpha"), "gamma", "alpha", 0.5, 2}};
  IterationPredictions last;
  last.iteration = 2;
  auto rows = retro_eval({ip, last}, {g1, g2});
  ASSERT_EQ(rows.size(), 1u);  // the last iteration has nothing to be checked against
  EXPECT_EQ(rows[0].from_iteration, 1);
  EXPECT_EQ(rows[0].to_iteration, 2);
  EXPECT_EQ(rows[0].n_predictions, 2u);
  EXPECT_DOUBLE_EQ(rows[0].link_confirmation_rate, 0.5);
  EXPECT_DOUBLE_EQ(rows[0].neighborhood_growth_rate, 2.0 / 3.0);
}

TEST(DistMult, ExportHasOneLinePerVector) {
  auto m = wkw::testing::block_model(2, 3, 1.0, 0.0, 1);
  DistMultConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 2;
  auto trained = train_distmult(m.train, cfg);
  std::ostringstream out;
  trained.model.export_jsonl(out);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  EXPECT_EQ(lines, 6u + kRelationTypes.size());
}
