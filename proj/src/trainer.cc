#include "evtuple/trainer.h"

#include <chrono>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"
#include "evtuple/model.h"

namespace evtuple {

using nlohmann::json;

namespace {

template <class T>
void read_key(const json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for train config key '" + key + "'");
  }
}

double floored_nll(const Vector& p, int index) {
  return -std::log(std::max(p(index), kProbFloor));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("train.epochs must be positive");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (clip_norm < 0.0) throw ConfigError("train.clip_norm must be >= 0");
  if (max_tuples < 0) throw ConfigError("train.max_tuples must be >= 0");
  if (!(null_sentence_rate >= 0.0 && null_sentence_rate <= 1.0)) {
    throw ConfigError("train.null_sentence_rate must lie in [0, 1]");
  }
}

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps},
          {"clip_norm", clip_norm},
          {"max_tuples", max_tuples},
          {"pad_tuples_in_loss", pad_tuples_in_loss},
          {"null_sentence_rate", null_sentence_rate},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") {
      read_key(value, key, c.epochs);
    } else if (key == "batch_size") {
      read_key(value, key, c.batch_size);
    } else if (key == "learning_rate") {
      read_key(value, key, c.learning_rate);
    } else if (key == "weight_decay") {
      read_key(value, key, c.weight_decay);
    } else if (key == "beta1") {
      read_key(value, key, c.beta1);
    } else if (key == "beta2") {
      read_key(value, key, c.beta2);
    } else if (key == "adam_eps") {
      read_key(value, key, c.adam_eps);
    } else if (key == "clip_norm") {
      read_key(value, key, c.clip_norm);
    } else if (key == "max_tuples") {
      read_key(value, key, c.max_tuples);
    } else if (key == "pad_tuples_in_loss") {
      read_key(value, key, c.pad_tuples_in_loss);
    } else if (key == "null_sentence_rate") {
      read_key(value, key, c.null_sentence_rate);
    } else if (key == "seed") {
      read_key(value, key, c.seed);
    } else {
      throw ConfigError("unknown train config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

double tuple_loss(const StepOutput& step, const EventTuple& gold, const LabelSchema& schema) {
  return floored_nll(step.s_tr, gold.s_tr) + floored_nll(step.e_tr, gold.e_tr) +
         floored_nll(step.s_ar, gold.s_ar) + floored_nll(step.e_ar, gold.e_ar) +
         floored_nll(step.event_type, schema.event_index(gold.event_type)) +
         floored_nll(step.role, schema.role_index(gold.role));
}

Var tuple_loss(Graph& g, const StepVars& step, const EventTuple& gold, const LabelSchema& schema) {
  const std::vector<Var> terms = {
      g.nll_at(step.s_tr, gold.s_tr, kProbFloor),
      g.nll_at(step.e_tr, gold.e_tr, kProbFloor),
      g.nll_at(step.s_ar, gold.s_ar, kProbFloor),
      g.nll_at(step.e_ar, gold.e_ar, kProbFloor),
      g.nll_at(step.event_type, schema.event_index(gold.event_type), kProbFloor),
      g.nll_at(step.role, schema.role_index(gold.role), kProbFloor)};
  return g.sum(terms);
}

Var sequence_loss(Graph& g, std::span<const StepVars> steps, std::span<const EventTuple> gold,
                  std::span<const int> tuple_mask, bool include_padding,
                  const LabelSchema& schema) {
  if (steps.size() != gold.size() || gold.size() != tuple_mask.size()) {
    throw InvalidInputError("sequence_loss: steps, gold and mask lengths differ");
  }
  std::vector<Var> terms;
  for (size_t t = 0; t < steps.size(); ++t) {
    if (!include_padding && tuple_mask[t] == 0) continue;
    terms.push_back(tuple_loss(g, steps[t], gold[t], schema));
  }
  if (terms.empty()) return g.constant(Matrix::Zero(1, 1));
  return g.sum(terms);
}

int loss_denominator(const Eigen::MatrixXi& tuple_mask, bool include_padding) {
  return include_padding ? static_cast<int>(tuple_mask.size()) : tuple_mask.sum();
}

Var batch_loss(Graph& g, std::span<const std::vector<StepVars>> outputs,
               std::span<const std::vector<EventTuple>> gold, const Eigen::MatrixXi& tuple_mask,
               bool include_padding, const LabelSchema& schema) {
  std::vector<Var> per_example;
  for (size_t b = 0; b < outputs.size(); ++b) {
    std::vector<int> mask(static_cast<size_t>(tuple_mask.cols()));
    for (size_t t = 0; t < mask.size(); ++t) {
      mask[t] = tuple_mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t));
    }
    per_example.push_back(sequence_loss(g, outputs[b], gold[b], mask, include_padding, schema));
  }
  const int denom = loss_denominator(tuple_mask, include_padding);
  return g.scale(g.sum(per_example), denom > 0 ? 1.0 / denom : 0.0);
}

Adam::Adam(ParameterSet& params, const TrainConfig& config) : params_(&params), config_(config) {
  for (const Parameter* p : params.all()) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  const auto params = params_->all();
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable || p.grad.size() == 0 || p.grad.isZero(0.0)) continue;
    const Matrix grad = p.grad + config_.weight_decay * p.value;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
    p.value.array() -= config_.learning_rate * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + config_.adam_eps);
  }
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params.all()) {
    if (p->trainable && p->grad.size() > 0) sq += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params.all()) {
      if (p->grad.size() > 0) p->grad *= s;
    }
  }
  return norm;
}

json EpochLog::to_json() const {
  json j = {{"epoch", epoch}, {"loss", loss}, {"seconds", seconds}};
  if (has_dev) {
    j["dev_f1"] = {{"TI", dev_f1[0]}, {"TC", dev_f1[1]}, {"AI", dev_f1[2]}, {"ARC", dev_f1[3]}};
  }
  return j;
}

int resolve_max_tuples(const TrainConfig& config, std::span<const CorpusExample> train) {
  if (config.max_tuples > 0) return config.max_tuples;
  return static_cast<int>(max_tuple_count(train)) + 1;
}

std::vector<std::vector<EventRecord>> predict_corpus(const Model& model,
                                                     std::span<const CorpusExample> examples,
                                                     int max_steps,
                                                     const InferenceConfig& inference) {
  std::vector<std::vector<EventRecord>> out;
  out.reserve(examples.size());
  for (const CorpusExample& ex : examples) {
    const auto tuples = extract_events(model, ex.sentence, max_steps, inference);
    out.push_back(decode_frames(tuples, ex.sentence));
  }
  return out;
}

std::vector<std::vector<EventRecord>> gold_records(std::span<const CorpusExample> examples) {
  std::vector<std::vector<EventRecord>> out;
  out.reserve(examples.size());
  for (const CorpusExample& ex : examples) out.push_back(decode_frames(ex.gold, ex.sentence));
  return out;
}

EvalReport evaluate_model(const Model& model, std::span<const CorpusExample> examples,
                          int max_steps, const InferenceConfig& inference,
                          std::span<const std::string> breakdowns) {
  const auto pred = predict_corpus(model, examples, max_steps, inference);
  const auto gold = gold_records(examples);
  return score(pred, gold, breakdowns);
}

TrainResult train(Model& model, std::span<const CorpusExample> train_set,
                  std::span<const CorpusExample> dev_set, const TrainConfig& config,
                  const InferenceConfig& inference, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training corpus is empty");
  TrainResult result;
  result.max_tuples = resolve_max_tuples(config, train_set);
  const int steps = result.max_tuples;
  ParameterSet& params = model.params();
  Adam adam(params, config);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Matrix> best;
  double best_arc = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::span<const CorpusExample> epoch_set = train_set;
    std::vector<CorpusExample> sampled;
    if (config.null_sentence_rate < 1.0) {
      std::mt19937_64 keep_rng(config.seed * 31 + static_cast<uint64_t>(epoch));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (const CorpusExample& ex : train_set) {
        const bool empty = ex.gold.size() == 1 && ex.gold[0].is_null();
        if (!empty || u(keep_rng) < config.null_sentence_rate) sampled.push_back(ex);
      }
      if (sampled.empty()) sampled.push_back(train_set.front());
      epoch_set = sampled;
    }
    const auto batches = make_batches(epoch_set, model.vocab(), config.batch_size, steps,
                                      config.seed + static_cast<uint64_t>(epoch));
    double loss_sum = 0.0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      const int denom = loss_denominator(batch.tuple_mask, config.pad_tuples_in_loss);
      params.zero_grad();
      double batch_loss_value = 0.0;
      for (int b = 0; b < batch.size(); ++b) {
        const CorpusExample& ex = epoch_set[batch.example_indices[static_cast<size_t>(b)]];
        Graph g;
        const auto outputs = model.forward(g, ex.sentence, steps, &dropout_rng);
        std::vector<int> mask(static_cast<size_t>(steps));
        for (int t = 0; t < steps; ++t) mask[static_cast<size_t>(t)] = batch.tuple_mask(b, t);
        const Var seq = sequence_loss(g, outputs, batch.gold[static_cast<size_t>(b)], mask,
                                      config.pad_tuples_in_loss, model.schema());
        if (!std::isfinite(seq.scalar())) {
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(bi + 1) + " (example '" + ex.id + "')");
        }
        if (denom == 0) continue;
        const Var scaled = g.scale(seq, 1.0 / denom);
        batch_loss_value += scaled.scalar();
        g.backward(scaled);
        g.accumulate_gradients();
      }
      if (config.clip_norm > 0.0) clip_gradients(params, config.clip_norm);
      adam.step();
      loss_sum += batch_loss_value;
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss = loss_sum / static_cast<double>(batches.size());
    if (!dev_set.empty()) {
      const EvalReport report = evaluate_model(model, dev_set, steps, inference);
      log.has_dev = true;
      for (Level l : kLevels) log.dev_f1[static_cast<size_t>(l)] = report.overall[l].f1();
      const double arc = log.dev_f1[static_cast<size_t>(Level::kARC)];
      if (arc > best_arc) {
        best_arc = arc;
        best = params.snapshot();
        result.best_epoch = epoch;
        result.best_dev_arc_f1 = arc;
      }
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  if (!best.empty()) {
    params.restore(best);
  } else {
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace evtuple
