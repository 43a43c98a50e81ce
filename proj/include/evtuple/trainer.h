// Tuple-sequence negative log-likelihood, Adam, and the epoch loop with
// dev-set model selection.
#ifndef EVTUPLE_TRAINER_H_
#define EVTUPLE_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evtuple/autodiff.h"
#include "evtuple/corpus.h"
#include "evtuple/decoder.h"
#include "evtuple/evaluator.h"
#include "evtuple/inferencer.h"

namespace evtuple {

class Model;

inline constexpr double kProbFloor = 1e-12;

struct TrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;  // L2 term added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  // Decoding steps per sentence during training and the default inference
  // step budget. 0 = one more than the longest gold sequence in the training
  // corpus, so every sentence ends with at least one null tuple.
  int max_tuples = 0;
  bool pad_tuples_in_loss = true;
  // Share of event-less training sentences kept in each epoch.
  double null_sentence_rate = 1.0;
  uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Six-term NLL of one gold tuple, each probability floored at kProbFloor.
double tuple_loss(const StepOutput& step, const EventTuple& gold, const LabelSchema& schema);
Var tuple_loss(Graph& g, const StepVars& step, const EventTuple& gold, const LabelSchema& schema);

// Sum of tuple losses of one sentence; padding positions (mask 0) are
// skipped unless include_padding.
Var sequence_loss(Graph& g, std::span<const StepVars> steps, std::span<const EventTuple> gold,
                  std::span<const int> tuple_mask, bool include_padding,
                  const LabelSchema& schema);

// Number of grid cells batch_loss divides by.
int loss_denominator(const Eigen::MatrixXi& tuple_mask, bool include_padding);

// Mean tuple loss over the B x ET grid (or over real tuples only).
// outputs[b] and gold[b] both have ET entries.
Var batch_loss(Graph& g, std::span<const std::vector<StepVars>> outputs,
               std::span<const std::vector<EventTuple>> gold, const Eigen::MatrixXi& tuple_mask,
               bool include_padding, const LabelSchema& schema);

class Adam {
 public:
  Adam(ParameterSet& params, const TrainConfig& config);
  // Updates every trainable parameter with a nonzero gradient.
  void step();
  int steps_taken() const { return t_; }

 private:
  ParameterSet* params_;
  TrainConfig config_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

// Scales gradients down to `max_norm` when larger; returns the norm before
// scaling.
double clip_gradients(ParameterSet& params, double max_norm);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // mean batch loss
  bool has_dev = false;
  std::array<double, 4> dev_f1{};  // TI, TC, AI, ARC
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_arc_f1 = 0.0;
  int max_tuples = 0;
};

// Resolved per-sentence step count (see TrainConfig::max_tuples).
int resolve_max_tuples(const TrainConfig& config, std::span<const CorpusExample> train);

// Raw-coordinate predictions for every example.
std::vector<std::vector<EventRecord>> predict_corpus(const Model& model,
                                                     std::span<const CorpusExample> examples,
                                                     int max_steps,
                                                     const InferenceConfig& inference = {});
std::vector<std::vector<EventRecord>> gold_records(std::span<const CorpusExample> examples);

EvalReport evaluate_model(const Model& model, std::span<const CorpusExample> examples,
                          int max_steps, const InferenceConfig& inference = {},
                          std::span<const std::string> breakdowns = {});

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains in place. With a non-empty dev set, the parameters left in `model`
// are those of the first epoch reaching the best dev ARC F1; otherwise the
// final ones. Throws TrainingError on a non-finite loss.
TrainResult train(Model& model, std::span<const CorpusExample> train_set,
                  std::span<const CorpusExample> dev_set, const TrainConfig& config,
                  const InferenceConfig& inference = {}, const EpochCallback& on_epoch = {});

}  // namespace evtuple

#endif  // EVTUPLE_TRAINER_H_
