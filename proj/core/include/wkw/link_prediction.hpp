#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wkw/kg.hpp"

namespace wkw {

enum class Optimizer { Adam, GradientDescent };

std::string_view to_string(Optimizer o);
std::optional<Optimizer> parse_optimizer(std::string_view s);

struct DistMultConfig {
  std::size_t dim = 100;
  int epochs = 50;
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::Adam;
  double init_range = 0.1;  // uniform in [-init_range, init_range]
  std::uint64_t seed = 42;
};

// Flat row-major parameter blocks: entities is n x dim, relations is 5 x dim.
struct DistMultParams {
  std::size_t dim = 0;
  std::vector<double> entities;
  std::vector<double> relations;

  double score(std::uint32_t h, std::uint32_t r, std::uint32_t t) const;
};

struct Sample {
  std::uint32_t head = 0;
  std::uint32_t relation = 0;
  std::uint32_t tail = 0;
  double label = 1.0;
};

// Mean binary cross-entropy with logits over the samples. When grad is
// non-null it receives d(loss)/d(params), shaped like params.
double loss_and_gradient(const DistMultParams& params, const std::vector<Sample>& samples,
                         DistMultParams* grad);

class DistMultModel {
 public:
  DistMultModel() = default;
  DistMultModel(DistMultParams params, std::vector<EntityId> ids, std::vector<std::string> names,
                std::vector<EntityType> types);

  double score(EntityId h, RelationType r, EntityId t) const;
  bool has(EntityId id) const { return index_.count(id) != 0; }
  std::uint32_t index_of(EntityId id) const { return index_.at(id); }

  const DistMultParams& params() const { return params_; }
  std::size_t entity_count() const { return ids_.size(); }
  const std::vector<EntityId>& ids() const { return ids_; }
  const std::string& name(std::uint32_t index) const { return names_[index]; }

  // One line per entity and relation: {"kind","name","type"?,"vector":[...]}.
  void export_jsonl(std::ostream& out) const;

 private:
  DistMultParams params_;
  std::vector<EntityId> ids_;
  std::vector<std::string> names_;
  std::vector<EntityType> types_;
  std::map<EntityId, std::uint32_t> index_;
};

struct TrainResult {
  DistMultModel model;
  std::vector<double> loss_history;  // mean loss at the start of each epoch
  double final_loss = 0.0;           // last epoch's mean loss, or the initial loss for 0 epochs
  std::vector<Sample> last_samples;  // positives then the negatives of the last evaluation
};

// Throws TrainingError when the graph has no relations or the config is unusable.
TrainResult train_distmult(const KnowledgeGraph& graph, const DistMultConfig& config);

struct PredictedLink {
  EntityId head;
  EntityId tail;
  std::string head_name;  // canonical names
  std::string tail_name;
  double score = 0.0;
  int rank = 0;  // 1-based
};

// Top-k absent supplies_to edges among companies, by descending score, ties by names.
std::vector<PredictedLink> predict_top_k(const DistMultModel& model, const KnowledgeGraph& graph,
                                         std::size_t k = 20);

struct RetroEvalRow {
  int from_iteration = 0;
  int to_iteration = 0;
  std::size_t n_entities = 0;
  double final_loss = 0.0;
  std::size_t n_predictions = 0;
  double link_confirmation_rate = 0.0;
  double neighborhood_growth_rate = 0.0;
};

struct IterationPredictions {
  int iteration = 0;
  double final_loss = 0.0;
  std::vector<PredictedLink> links;
};

// graphs[i] is G_{i+1}; predictions are matched to graphs by iteration.
// Entities are matched across graphs by canonical name.
std::vector<RetroEvalRow> retro_eval(const std::vector<IterationPredictions>& predictions,
                                     const std::vector<KnowledgeGraph>& graphs);

}  // namespace wkw
