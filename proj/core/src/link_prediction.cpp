#include "wkw/link_prediction.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"

namespace wkw {

std::string_view to_string(Optimizer o) {
  return o == Optimizer::Adam ? "adam" : "gd";
}

std::optional<Optimizer> parse_optimizer(std::string_view s) {
  std::string low = to_lower(s);
  if (low == "adam") return Optimizer::Adam;
  if (low == "gd" || low == "sgd" || low == "gradient_descent") return Optimizer::GradientDescent;
  return std::nullopt;
}

double DistMultParams::score(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
  const double* eh = &entities[h * dim];
  const double* wr = &relations[r * dim];
  const double* et = &entities[t * dim];
  double s = 0.0;
  // head*tail first, so swapping them gives a bitwise identical score
  for (std::size_t i = 0; i < dim; ++i) s += eh[i] * et[i] * wr[i];
  return s;
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// 53 random bits mapped to [0, 1); avoids implementation-defined distributions.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double loss_and_gradient(const DistMultParams& p, const std::vector<Sample>& samples,
                         DistMultParams* grad) {
  if (samples.empty()) return 0.0;
  const std::size_t d = p.dim;
  if (grad) {
    grad->dim = d;
    grad->entities.assign(p.entities.size(), 0.0);
    grad->relations.assign(p.relations.size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double total = 0.0;
  for (const Sample& s : samples) {
    const double logit = p.score(s.head, s.relation, s.tail);
    total += softplus(logit) - s.label * logit;
    if (!grad) continue;
    const double g = (sigmoid(logit) - s.label) * inv_n;
    const double* eh = &p.entities[s.head * d];
    const double* wr = &p.relations[s.relation * d];
    const double* et = &p.entities[s.tail * d];
    double* gh = &grad->entities[s.head * d];
    double* gr = &grad->relations[s.relation * d];
    double* gt = &grad->entities[s.tail * d];
    for (std::size_t i = 0; i < d; ++i) {
      gh[i] += g * wr[i] * et[i];
      gr[i] += g * eh[i] * et[i];
      gt[i] += g * eh[i] * wr[i];
    }
  }
  return total * inv_n;
}

DistMultModel::DistMultModel(DistMultParams params, std::vector<EntityId> ids,
                             std::vector<std::string> names, std::vector<EntityType> types)
    : params_(std::move(params)), ids_(std::move(ids)), names_(std::move(names)),
      types_(std::move(types)) {
  for (std::uint32_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = i;
}

double DistMultModel::score(EntityId h, RelationType r, EntityId t) const {
  return params_.score(index_.at(h), static_cast<std::uint32_t>(r), index_.at(t));
}

void DistMultModel::export_jsonl(std::ostream& out) const {
  const std::size_t d = params_.dim;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    std::vector<double> v(params_.entities.begin() + i * d, params_.entities.begin() + (i + 1) * d);
    out << nlohmann::json{{"kind", "entity"},
                          {"name", names_[i]},
                          {"type", to_string(types_[i])},
                          {"vector", v}}
               .dump()
        << '\n';
  }
  for (RelationType r : kRelationTypes) {
    auto i = static_cast<std::size_t>(r);
    std::vector<double> v(params_.relations.begin() + i * d, params_.relations.begin() + (i + 1) * d);
    out << nlohmann::json{{"kind", "relation"}, {"name", to_string(r)}, {"vector", v}}.dump()
        << '\n';
  }
}

TrainResult train_distmult(const KnowledgeGraph& graph, const DistMultConfig& config) {
  if (graph.relations().empty()) throw TrainingError("cannot train on a graph without relations");
  if (config.dim == 0) throw TrainingError("embedding dimension must be positive");
  if (config.epochs < 0) throw TrainingError("epoch count must be non-negative");
  if (!(config.learning_rate > 0)) throw TrainingError("learning rate must be positive");

  std::vector<EntityId> ids;
  std::vector<std::string> names;
  std::vector<EntityType> types;
  std::map<EntityId, std::uint32_t> index;
  for (const auto& [id, e] : graph.entities()) {
    index[id] = static_cast<std::uint32_t>(ids.size());
    ids.push_back(id);
    names.push_back(e.canonical_name);
    types.push_back(e.type);
  }
  const std::size_t n = ids.size();
  const std::size_t d = config.dim;

  std::mt19937_64 rng(config.seed);
  DistMultParams p;
  p.dim = d;
  p.entities.resize(n * d);
  p.relations.resize(kRelationTypes.size() * d);
  for (double& x : p.entities) x = (2.0 * unit(rng) - 1.0) * config.init_range;
  for (double& x : p.relations) x = (2.0 * unit(rng) - 1.0) * config.init_range;

  std::vector<Sample> positives;
  for (const Relation& r : graph.relations())
    positives.push_back({index.at(r.source), static_cast<std::uint32_t>(r.type), index.at(r.target), 1.0});

  auto sample_batch = [&] {
    std::vector<Sample> batch = positives;
    for (const Sample& s : positives) {
      auto tail = static_cast<std::uint32_t>(std::min<double>(n - 1, std::floor(unit(rng) * n)));
      batch.push_back({s.head, s.relation, tail, 0.0});
    }
    return batch;
  };

  TrainResult result;
  std::vector<double> m_e, v_e, m_r, v_r;
  if (config.optimizer == Optimizer::Adam) {
    m_e.assign(p.entities.size(), 0.0);
    v_e = m_e;
    m_r.assign(p.relations.size(), 0.0);
    v_r = m_r;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  DistMultParams grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    result.last_samples = sample_batch();
    double loss = loss_and_gradient(p, result.last_samples, &grad);
    if (!std::isfinite(loss)) throw TrainingError("loss diverged");
    result.loss_history.push_back(loss);
    if (config.optimizer == Optimizer::GradientDescent) {
      for (std::size_t i = 0; i < p.entities.size(); ++i) p.entities[i] -= config.learning_rate * grad.entities[i];
      for (std::size_t i = 0; i < p.relations.size(); ++i) p.relations[i] -= config.learning_rate * grad.relations[i];
    } else {
      const double c1 = 1.0 - std::pow(kBeta1, epoch);
      const double c2 = 1.0 - std::pow(kBeta2, epoch);
      auto step = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = kBeta1 * m[i] + (1 - kBeta1) * g[i];
          v[i] = kBeta2 * v[i] + (1 - kBeta2) * g[i] * g[i];
          w[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
        }
      };
      step(p.entities, grad.entities, m_e, v_e);
      step(p.relations, grad.relations, m_r, v_r);
    }
  }
  if (config.epochs == 0) {
    result.last_samples = sample_batch();
    result.final_loss = loss_and_gradient(p, result.last_samples, nullptr);
  } else {
    result.final_loss = result.loss_history.back();
  }
  result.model = DistMultModel(std::move(p), std::move(ids), std::move(names), std::move(types));
  return result;
}

std::vector<PredictedLink> predict_top_k(const DistMultModel& model, const KnowledgeGraph& graph,
                                         std::size_t k) {
  std::vector<const Entity*> companies;
  for (const auto& [id, e] : graph.entities())
    if (e.type == EntityType::Company && model.has(id)) companies.push_back(&e);
  std::vector<PredictedLink> out;
  if (companies.size() < 2 || k == 0) return out;

  std::set<std::pair<EntityId, EntityId>> existing;
  for (const Relation& r : graph.relations())
    if (r.type == RelationType::SuppliesTo) existing.insert({r.source, r.target});

  const auto rel = static_cast<std::uint32_t>(RelationType::SuppliesTo);
  const DistMultParams& p = model.params();
  for (const Entity* h : companies) {
    const std::uint32_t hi = model.index_of(h->id);
    for (const Entity* t : companies) {
      if (h == t || existing.count({h->id, t->id})) continue;
      out.push_back({h->id, t->id, h->canonical_name, t->canonical_name,
                     p.score(hi, rel, model.index_of(t->id)), 0});
    }
  }
  auto better = [](const PredictedLink& a, const PredictedLink& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.head_name != b.head_name) return a.head_name < b.head_name;
    return a.tail_name < b.tail_name;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

namespace {

std::set<std::pair<std::string, std::string>> supply_pairs(const KnowledgeGraph& g) {
  std::set<std::pair<std::string, std::string>> out;
  for (const Relation& r : g.relations())
    if (r.type == RelationType::SuppliesTo)
      out.insert({g.entity(r.source).canonical_name, g.entity(r.target).canonical_name});
  return out;
}

std::map<std::string, std::size_t> company_degrees(const KnowledgeGraph& g) {
  std::map<std::string, std::size_t> out;
  for (const auto& [id, deg] : degrees(g)) {
    const Entity& e = g.entity(id);
    if (e.type == EntityType::Company) out[e.canonical_name] = deg;
  }
  return out;
}

}  // namespace

std::vector<RetroEvalRow> retro_eval(const std::vector<IterationPredictions>& predictions,
                                     const std::vector<KnowledgeGraph>& graphs) {
  std::vector<RetroEvalRow> rows;
  const int T = static_cast<int>(graphs.size());
  std::vector<std::set<std::pair<std::string, std::string>>> pairs;
  std::vector<std::map<std::string, std::size_t>> deg;
  for (const auto& g : graphs) {
    pairs.push_back(supply_pairs(g));
    deg.push_back(company_degrees(g));
  }
  for (const IterationPredictions& ip : predictions) {
    const int t = ip.iteration;
    if (t < 1 || t >= T) continue;
    RetroEvalRow row;
    row.from_iteration = t;
    row.to_iteration = t + 1;
    row.n_entities = graphs[t - 1].entity_count();
    row.final_loss = ip.final_loss;
    row.n_predictions = ip.links.size();
    if (!ip.links.empty()) {
      std::size_t confirmed = 0;
      std::set<std::string> touched;
      for (const PredictedLink& l : ip.links) {
        touched.insert(l.head_name);
        touched.insert(l.tail_name);
        for (int later = t + 1; later <= T; ++later)
          if (pairs[later - 1].count({l.head_name, l.tail_name})) {
            ++confirmed;
            break;
          }
      }
      std::size_t grew = 0;
      for (const auto& name : touched) {
        auto before = deg[t - 1].find(name);
        auto after = deg[t].find(name);
        std::size_t b = before == deg[t - 1].end() ? 0 : before->second;
        std::size_t a = after == deg[t].end() ? 0 : after->second;
        if (a > b) ++grew;
      }
      row.link_confirmation_rate = static_cast<double>(confirmed) / ip.links.size();
      row.neighborhood_growth_rate = static_cast<double>(grew) / touched.size();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wkw
