#include "evtuple/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"

namespace evtuple {

using nlohmann::json;

LabelIndex::LabelIndex() : LabelIndex(std::vector<std::string>{}) {}

LabelIndex::LabelIndex(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  labels_ = {"<unk>", std::string(kSentinelFeature)};
  for (auto& l : labels) {
    if (l == kSentinelFeature || l == "<unk>") continue;
    labels_.push_back(std::move(l));
  }
  for (size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]] = static_cast<int>(i);
}

int LabelIndex::lookup(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kUnk : it->second;
}

json FeatureVocab::to_json() const {
  auto strip = [](const LabelIndex& idx) {
    return std::vector<std::string>(idx.labels().begin() + 2, idx.labels().end());
  };
  return {{"pos", strip(pos)}, {"dep", strip(dep)}, {"ent", strip(ent)},
          {"chars", strip(chars)}};
}

FeatureVocab FeatureVocab::from_json(const json& j) {
  FeatureVocab v;
  v.pos = LabelIndex(j.at("pos").get<std::vector<std::string>>());
  v.dep = LabelIndex(j.at("dep").get<std::vector<std::string>>());
  v.ent = LabelIndex(j.at("ent").get<std::vector<std::string>>());
  v.chars = LabelIndex(j.at("chars").get<std::vector<std::string>>());
  return v;
}

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
    }
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

FeatureVocab build_vocab(std::span<const CorpusExample> examples) {
  if (examples.empty()) throw InvalidInputError("cannot build vocab from no examples");
  std::set<std::string> pos, dep, ent, chars;
  for (const auto& ex : examples) {
    const Sentence& s = ex.sentence;
    pos.insert(s.pos_tags.begin(), s.pos_tags.end());
    dep.insert(s.dep_tags.begin(), s.dep_tags.end());
    ent.insert(s.ent_tags.begin(), s.ent_tags.end());
    for (const auto& tok : s.raw_tokens()) {
      for (auto& c : utf8_chars(tok)) chars.insert(std::move(c));
    }
  }
  auto vec = [](const std::set<std::string>& s) {
    return std::vector<std::string>(s.begin(), s.end());
  };
  return FeatureVocab{LabelIndex(vec(pos)), LabelIndex(vec(dep)), LabelIndex(vec(ent)),
                      LabelIndex(vec(chars))};
}

std::vector<EventRecord> parse_events(const json& events) {
  std::vector<EventRecord> out;
  for (const json& e : events) {
    EventRecord rec;
    const auto trig = e.at("trigger").get<std::vector<int>>();
    if (trig.size() != 2) throw FormatError("trigger must be [start, end]");
    rec.trigger = Span{trig[0], trig[1]};
    rec.type = e.at("type").get<std::string>();
    if (e.contains("arguments")) {
      for (const json& a : e.at("arguments")) {
        const auto span = a.at("span").get<std::vector<int>>();
        if (span.size() != 2) throw FormatError("argument span must be [start, end]");
        rec.arguments.push_back(
            Argument{Span{span[0], span[1]}, a.at("role").get<std::string>(), {}});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

json events_to_json(std::span<const EventRecord> events) {
  json arr = json::array();
  for (const EventRecord& e : events) {
    json args = json::array();
    for (const Argument& a : e.arguments) {
      args.push_back({{"span", {a.span.start, a.span.end}}, {"role", a.role}});
    }
    arr.push_back({{"trigger", {e.trigger.start, e.trigger.end}},
                   {"type", e.type},
                   {"arguments", std::move(args)}});
  }
  return arr;
}

CorpusExample parse_record(const json& record, const LabelSchema& schema, int line) {
  CorpusExample ex;
  try {
    ex.id = record.contains("id") ? record.at("id").get<std::string>()
                                  : std::to_string(line);
    const auto tokens = record.at("tokens").get<std::vector<std::string>>();
    const auto pos = record.at("pos").get<std::vector<std::string>>();
    const auto dep = record.at("dep").get<std::vector<std::string>>();
    const auto ent = record.at("ent_bio").get<std::vector<std::string>>();
    ex.sentence = augment_sentence(tokens, pos, dep, ent);
    const auto events =
        parse_events(record.contains("events") ? record.at("events") : json::array());
    ex.gold = encode_frames(ex.sentence, events, schema);
  } catch (const json::exception& e) {
    throw FormatError(e.what(), line);
  } catch (const InvalidInputError& e) {
    throw FormatError(e.what(), line);
  } catch (const SchemaError& e) {
    throw SchemaError("line " + std::to_string(line) + ": " + e.what());
  } catch (const FormatError& e) {
    if (e.line() > 0) throw;
    throw FormatError(e.what(), line);
  }
  return ex;
}

std::vector<CorpusExample> parse_corpus(std::istream& in, const LabelSchema& schema) {
  std::vector<CorpusExample> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::exception& e) {
      throw FormatError(e.what(), line);
    }
    out.push_back(parse_record(record, schema, line));
  }
  return out;
}

std::vector<CorpusExample> load_corpus(const std::string& path,
                                       const LabelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus '" + path + "'");
  return parse_corpus(in, schema);
}

json example_to_json(const CorpusExample& ex) {
  const Sentence& s = ex.sentence;
  auto raw = [](const std::vector<std::string>& v) {
    return std::vector<std::string>(v.begin() + kSentinelCount, v.end());
  };
  const auto events = decode_frames(ex.gold, s);
  json j;
  j["id"] = ex.id;
  j["tokens"] = raw(s.tokens);
  j["pos"] = raw(s.pos_tags);
  j["dep"] = raw(s.dep_tags);
  j["ent_bio"] = raw(s.ent_tags);
  j["events"] = events_to_json(events);
  return j;
}

void write_corpus(std::ostream& out, std::span<const CorpusExample> examples) {
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

void save_corpus(const std::string& path, std::span<const CorpusExample> examples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_corpus(out, examples);
}

std::vector<int> char_ids(const std::string& token, const LabelIndex& chars) {
  std::vector<int> ids(kMaxWordLength, -1);
  if (token == kTriggerSentinel || token == kArgumentSentinel) {
    ids[0] = LabelIndex::kSent;
    return ids;
  }
  const auto cs = utf8_chars(token);
  for (size_t i = 0; i < cs.size() && i < ids.size(); ++i) ids[i] = chars.lookup(cs[i]);
  return ids;
}

size_t max_tuple_count(std::span<const CorpusExample> examples) {
  size_t m = 0;
  for (const auto& ex : examples) m = std::max(m, ex.gold.size());
  return m;
}

std::vector<Batch> make_batches(std::span<const CorpusExample> examples,
                                const FeatureVocab& vocab, int batch_size,
                                int max_tuples, std::optional<uint64_t> shuffle_seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (max_tuples < 1) throw ConfigError("max_tuples must be positive");
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.gold.size()) > max_tuples) {
      throw ConfigError("example '" + ex.id + "' has " + std::to_string(ex.gold.size()) +
                        " gold tuples, more than max_tuples=" +
                        std::to_string(max_tuples));
    }
  }
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), begin + static_cast<size_t>(batch_size));
    Batch b;
    b.example_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    const int rows = b.size();
    for (size_t idx : b.example_indices) {
      b.max_len = std::max(b.max_len, examples[idx].sentence.size());
    }
    b.pos_ids = Eigen::MatrixXi::Constant(rows, b.max_len, -1);
    b.dep_ids = Eigen::MatrixXi::Constant(rows, b.max_len, -1);
    b.ent_ids = Eigen::MatrixXi::Constant(rows, b.max_len, -1);
    b.char_ids = Eigen::MatrixXi::Constant(rows, b.max_len * kMaxWordLength, -1);
    b.token_mask = Eigen::MatrixXi::Zero(rows, b.max_len);
    b.tuple_mask = Eigen::MatrixXi::Zero(rows, max_tuples);
    for (int r = 0; r < rows; ++r) {
      const CorpusExample& ex = examples[b.example_indices[static_cast<size_t>(r)]];
      const Sentence& s = ex.sentence;
      for (int i = 0; i < s.size(); ++i) {
        const auto ui = static_cast<size_t>(i);
        b.pos_ids(r, i) = vocab.pos.lookup(s.pos_tags[ui]);
        b.dep_ids(r, i) = vocab.dep.lookup(s.dep_tags[ui]);
        b.ent_ids(r, i) = vocab.ent.lookup(s.ent_tags[ui]);
        const auto cids = char_ids(s.tokens[ui], vocab.chars);
        for (int k = 0; k < kMaxWordLength; ++k) {
          b.char_ids(r, i * kMaxWordLength + k) = cids[static_cast<size_t>(k)];
        }
        b.token_mask(r, i) = 1;
      }
      std::vector<EventTuple> gold = ex.gold;
      for (size_t k = 0; k < gold.size(); ++k) b.tuple_mask(r, static_cast<int>(k)) = 1;
      gold.resize(static_cast<size_t>(max_tuples), EventTuple::null_tuple());
      b.gold.push_back(std::move(gold));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Synthetic corpus.

json SyntheticConfig::to_json() const {
  return {{"num_sentences", num_sentences},
          {"num_event_types", num_event_types},
          {"num_roles", num_roles},
          {"multi_event_rate", multi_event_rate},
          {"shared_arg_rate", shared_arg_rate},
          {"overlap_arg_rate", overlap_arg_rate},
          {"null_sentence_rate", null_sentence_rate},
          {"seed", seed}};
}

SyntheticConfig SyntheticConfig::from_json(const json& j) {
  SyntheticConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_sentences") {
      c.num_sentences = value.get<int>();
    } else if (key == "num_event_types") {
      c.num_event_types = value.get<int>();
    } else if (key == "num_roles") {
      c.num_roles = value.get<int>();
    } else if (key == "multi_event_rate") {
      c.multi_event_rate = value.get<double>();
    } else if (key == "shared_arg_rate") {
      c.shared_arg_rate = value.get<double>();
    } else if (key == "overlap_arg_rate") {
      c.overlap_arg_rate = value.get<double>();
    } else if (key == "null_sentence_rate") {
      c.null_sentence_rate = value.get<double>();
    } else if (key == "seed") {
      c.seed = value.get<uint64_t>();
    } else {
      throw ConfigError("unknown synthetic config key '" + key + "'");
    }
  }
  return c;
}

namespace {

const std::vector<std::string> kEventTypeNames = {
    "Movement:Transport",   "Conflict:Attack",      "Life:Die",
    "Contact:Meet",         "Justice:Arrest-Jail",  "Transaction:Transfer-Money",
    "Life:Injure",          "Personnel:Elect",      "Business:Start-Org",
    "Justice:Sentence",     "Contact:Phone-Write",  "Personnel:End-Position",
    "Conflict:Demonstrate", "Justice:Charge-Indict", "Life:Marry"};

const std::vector<std::string> kRoleNames = {
    "Artifact", "Destination", "Place",  "Victim", "Attacker", "Target",
    "Agent",    "Instrument",  "Origin", "Entity", "Person",   "Money"};

// One cue word per role; the cue precedes the argument phrase.
const std::vector<std::string> kRoleCues = {
    "carrying", "toward", "in",   "against", "by",       "upon",
    "for",      "with",   "from", "beside",  "alongside", "worth"};

const std::vector<std::string> kVerbs = {
    "moved",     "shipped",   "sent",      "attacked",  "struck",   "bombed",
    "killed",    "murdered",  "executed",  "met",       "visited",  "hosted",
    "arrested",  "detained",  "jailed",    "paid",      "donated",  "funded",
    "injured",   "wounded",   "hurt",      "elected",   "chose",    "voted",
    "founded",   "launched",  "created",   "sentenced", "punished", "condemned",
    "called",    "wrote",     "phoned",    "fired",     "dismissed", "removed",
    "protested", "marched",   "rallied",   "charged",   "indicted", "accused",
    "married",   "wed",       "engaged"};

struct EntityLexicon {
  std::string type;
  std::vector<std::string> nouns;
  bool proper;
};

const std::vector<EntityLexicon> kEntities = {
    {"PER", {"soldiers", "officials", "troops", "civilians", "reporters", "leaders"}, false},
    {"ORG", {"army", "government", "company", "ministry", "union", "council"}, false},
    {"LOC", {"Baghdad", "Gulf", "Basra", "Kabul", "Paris", "Moscow"}, true},
    {"WEA", {"missiles", "rifles", "tanks", "bombs", "shells", "drones"}, false},
    {"VEH", {"trucks", "ships", "planes", "convoys", "jeeps", "helicopters"}, false},
};

const std::vector<std::string> kAdjectives = {"American", "local", "foreign",
                                              "armed",    "senior", "heavy"};
const std::vector<std::string> kSubjects = {"Officials", "Witnesses", "Sources",
                                            "Authorities", "Forces", "Analysts"};

struct Token {
  std::string text, pos, dep, ent;
};

class Generator {
 public:
  explicit Generator(const SyntheticConfig& c) : config_(c), rng_(c.seed) {
    for (int t = 0; t < c.num_event_types; ++t) {
      types_.push_back(t < static_cast<int>(kEventTypeNames.size())
                           ? kEventTypeNames[static_cast<size_t>(t)]
                           : "Event:Type" + std::to_string(t));
    }
    for (int r = 0; r < c.num_roles; ++r) {
      roles_.push_back(r < static_cast<int>(kRoleNames.size())
                           ? kRoleNames[static_cast<size_t>(r)]
                           : "Role" + std::to_string(r));
      cues_.push_back(r < static_cast<int>(kRoleCues.size())
                          ? kRoleCues[static_cast<size_t>(r)]
                          : "cue" + std::to_string(r));
    }
    overlap_role_ = std::min(2, c.num_roles - 1);
    for (int t = 0; t < c.num_event_types; ++t) {
      std::vector<std::string> lex;
      for (int k = 0; k < 3; ++k) {
        const size_t v = static_cast<size_t>(3 * t + k);
        lex.push_back(v < kVerbs.size() ? kVerbs[v]
                                        : "verb" + std::to_string(t) + "x" + std::to_string(k));
      }
      triggers_.push_back(std::move(lex));
      // Two or three roles per event type, chosen from the seed.
      std::vector<int> all(static_cast<size_t>(c.num_roles));
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng_);
      const int k = std::min(c.num_roles, 2 + static_cast<int>(uniform() < 0.5));
      allowed_.emplace_back(all.begin(), all.begin() + k);
    }
  }

  SyntheticCorpus run() {
    SyntheticCorpus out{LabelSchema(types_, roles_), {}, {}};
    for (int i = 0; i < config_.num_sentences; ++i) {
      SyntheticFlags flags;
      std::vector<Token> toks;
      std::vector<EventRecord> events;
      const bool overlap = uniform() < config_.overlap_arg_rate;
      const bool null_sentence = !overlap && uniform() < config_.null_sentence_rate;
      if (null_sentence) {
        filler_sentence(toks);
      } else {
        const bool multi = uniform() < config_.multi_event_rate;
        const bool shared = multi && uniform() < config_.shared_arg_rate;
        subject(toks);
        events.push_back(clause(toks, overlap, /*min_args=*/(overlap || shared) ? 1 : 0));
        if (multi) {
          toks.push_back({",", "PUNCT", "punct", "O"});
          toks.push_back({"and", "CCONJ", "cc", "O"});
          if (shared) {
            EventRecord second = trigger_only(toks);
            const Argument& src = events[0].arguments.front();
            second.arguments.push_back(
                Argument{src.span, roles_[static_cast<size_t>(primary_role(second.type))], {}});
            events.push_back(std::move(second));
          } else {
            events.push_back(clause(toks, false, 0));
          }
          flags.multi_event = true;
          flags.shared_argument = shared;
        }
        flags.overlapping_arguments = overlap;
      }
      toks.push_back({".", "PUNCT", "punct", "O"});

      std::vector<std::string> words, pos, dep, ent;
      for (auto& t : toks) {
        words.push_back(t.text);
        pos.push_back(t.pos);
        dep.push_back(t.dep);
        ent.push_back(t.ent);
      }
      CorpusExample ex;
      ex.id = "syn-" + std::to_string(config_.seed) + "-" + std::to_string(i);
      ex.sentence = augment_sentence(words, pos, dep, ent);
      ex.gold = encode_frames(ex.sentence, events, out.schema);
      out.examples.push_back(std::move(ex));
      out.flags.push_back(flags);
    }
    return out;
  }

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  int pick(size_t n) {
    return static_cast<int>(std::uniform_int_distribution<size_t>(0, n - 1)(rng_));
  }
  template <class T>
  const T& choose(const std::vector<T>& v) {
    return v[static_cast<size_t>(pick(v.size()))];
  }

  int primary_role(const std::string& type) const {
    const auto it = std::find(types_.begin(), types_.end(), type);
    return allowed_[static_cast<size_t>(it - types_.begin())].front();
  }

  void subject(std::vector<Token>& toks) {
    toks.push_back({choose(kSubjects), "NOUN", "nsubj", "O"});
    if (uniform() < 0.3) toks.push_back({"reportedly", "ADV", "advmod", "O"});
  }

  void filler_sentence(std::vector<Token>& toks) {
    subject(toks);
    toks.push_back({"said", "VERB", "ROOT", "O"});
    toks.push_back({"the", "DET", "det", "O"});
    noun_phrase(toks);
    toks.push_back({"remained", "VERB", "ccomp", "O"});
    toks.push_back({choose(std::vector<std::string>{"calm", "quiet", "unchanged"}),
                    "ADJ", "acomp", "O"});
  }

  // Appends an entity phrase and returns its span in raw coordinates.
  Span noun_phrase(std::vector<Token>& toks) {
    const auto& lex = choose(kEntities);
    const int start = static_cast<int>(toks.size());
    const std::string b = "B-" + lex.type, in = "I-" + lex.type;
    if (lex.proper) {
      toks.push_back({choose(lex.nouns), "PROPN", "pobj", b});
    } else {
      toks.push_back({"the", "DET", "det", b});
      if (uniform() < 0.5) toks.push_back({choose(kAdjectives), "ADJ", "amod", in});
      toks.push_back({choose(lex.nouns), "NOUN", "pobj", in});
    }
    return Span{start, static_cast<int>(toks.size()) - 1};
  }

  EventRecord trigger_only(std::vector<Token>& toks) {
    const int t = pick(types_.size());
    EventRecord ev;
    ev.type = types_[static_cast<size_t>(t)];
    const int k = pick(3);
    const int start = static_cast<int>(toks.size());
    toks.push_back({triggers_[static_cast<size_t>(t)][static_cast<size_t>(k)], "VERB",
                    "ROOT", "O"});
    if (k == 2) toks.push_back({"off", "PART", "prt", "O"});  // two-token trigger
    ev.trigger = Span{start, static_cast<int>(toks.size()) - 1};
    return ev;
  }

  EventRecord clause(std::vector<Token>& toks, bool overlap, int min_args) {
    EventRecord ev = trigger_only(toks);
    const auto& allowed =
        allowed_[static_cast<size_t>(std::find(types_.begin(), types_.end(), ev.type) -
                                     types_.begin())];
    int nargs = uniform() < 0.15 ? 0 : 1 + pick(allowed.size());
    nargs = std::max(nargs, min_args);
    std::vector<int> roles = allowed;
    std::shuffle(roles.begin(), roles.end(), rng_);
    for (int a = 0; a < nargs; ++a) {
      const int role = roles[static_cast<size_t>(a)];
      toks.push_back({cues_[static_cast<size_t>(role)], "ADP", "prep", "O"});
      const Span span = noun_phrase(toks);
      ev.arguments.push_back(Argument{span, roles_[static_cast<size_t>(role)], {}});
      if (overlap && a == 0) {
        // "<phrase> of <LOC>": the location is an argument nested inside the
        // enclosing phrase.
        toks.push_back({"of", "ADP", "prep", "O"});
        const int loc = static_cast<int>(toks.size());
        toks.push_back({choose(kEntities[2].nouns), "PROPN", "pobj", "B-LOC"});
        ev.arguments.back().span.end = loc;
        ev.arguments.push_back(
            Argument{Span{loc, loc}, roles_[static_cast<size_t>(overlap_role_)], {}});
      }
    }
    return ev;
  }

  SyntheticConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::string> types_, roles_, cues_;
  std::vector<std::vector<std::string>> triggers_;
  std::vector<std::vector<int>> allowed_;
  int overlap_role_ = 0;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  if (config.num_sentences < 1 || config.num_event_types < 1 || config.num_roles < 1) {
    throw ConfigError("synthetic corpus counts must be positive");
  }
  for (double r : {config.multi_event_rate, config.shared_arg_rate,
                   config.overlap_arg_rate, config.null_sentence_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("synthetic rates must lie in [0, 1]");
  }
  return Generator(config).run();
}

}  // namespace evtuple
