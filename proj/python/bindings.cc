#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "evtuple/corpus.h"
#include "evtuple/errors.h"
#include "evtuple/evaluator.h"
#include "evtuple/frame_codec.h"
#include "evtuple/inferencer.h"
#include "evtuple/model.h"
#include "evtuple/trainer.h"

namespace py = pybind11;
using nlohmann::json;
using namespace evtuple;

namespace {

// Python objects cross the boundary as JSON text.
json to_json(const py::handle& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<std::vector<EventRecord>> events_list(const py::handle& obj) {
  std::vector<std::vector<EventRecord>> out;
  for (const auto& item : to_json(obj)) out.push_back(parse_events(item));
  return out;
}

StepOutput step_output(const Vector& s_tr, const Vector& e_tr, const Vector& s_ar,
                       const Vector& e_ar, const Vector& event_type, const Vector& role) {
  const auto n = s_tr.size();
  if (e_tr.size() != n || s_ar.size() != n || e_ar.size() != n) {
    throw InvalidInputError("position distributions must share one length");
  }
  return StepOutput{s_tr, e_tr, s_ar, e_ar, event_type, role, {}, {}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sequence-to-tuple event extraction core";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AlignmentError>(m, "AlignmentError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::class_<LabelSchema>(m, "LabelSchema")
      .def(py::init<std::vector<std::string>, std::vector<std::string>>(),
           py::arg("event_types"), py::arg("role_types"))
      .def_property_readonly("event_types", &LabelSchema::event_types)
      .def_property_readonly("role_types", &LabelSchema::role_types)
      .def("to_dict", [](const LabelSchema& s) { return from_json(s.to_json()); })
      .def_static("from_dict", [](const py::dict& d) { return LabelSchema::from_json(to_json(d)); })
      .def_static("load", &LabelSchema::load)
      .def("save", &LabelSchema::save)
      .def(py::self == py::self);

  py::class_<EventTuple>(m, "EventTuple")
      .def(py::init<>())
      .def(py::init([](int s_tr, int e_tr, std::string type, int s_ar, int e_ar,
                       std::string role) {
             return EventTuple{s_tr, e_tr, std::move(type), s_ar, e_ar, std::move(role)};
           }),
           py::arg("s_tr"), py::arg("e_tr"), py::arg("event_type"), py::arg("s_ar"),
           py::arg("e_ar"), py::arg("role"))
      .def_readwrite("s_tr", &EventTuple::s_tr)
      .def_readwrite("e_tr", &EventTuple::e_tr)
      .def_readwrite("event_type", &EventTuple::event_type)
      .def_readwrite("s_ar", &EventTuple::s_ar)
      .def_readwrite("e_ar", &EventTuple::e_ar)
      .def_readwrite("role", &EventTuple::role)
      .def("is_null", &EventTuple::is_null)
      .def_static("null", &EventTuple::null_tuple)
      .def(py::self == py::self)
      .def("__repr__", [](const EventTuple& t) {
        return "EventTuple(" + format_tuples(std::span<const EventTuple>(&t, 1)) + ")";
      });

  m.def("format_tuples", [](const std::vector<EventTuple>& t) { return format_tuples(t); });
  m.def("parse_tuples", [](const std::string& s) { return parse_tuples(s); });

  m.def(
      "encode_record",
      [](const py::dict& record, const LabelSchema& schema) {
        const CorpusExample ex = parse_record(to_json(record), schema, 0);
        return py::make_tuple(ex.sentence.tokens, ex.gold);
      },
      py::arg("record"), py::arg("schema"),
      "Augmented tokens and gold tuples of one corpus record.");
  m.def(
      "decode_tuples",
      [](const std::vector<EventTuple>& tuples, const std::vector<std::string>& tokens) {
        Sentence s;
        s.tokens = tokens;
        return from_json(events_to_json(decode_frames(tuples, s)));
      },
      py::arg("tuples"), py::arg("tokens"),
      "Events in raw coordinates; `tokens` are the augmented tokens.");

  m.def(
      "best_span",
      [](const std::vector<double>& start, const std::vector<double>& end,
         const std::vector<int>& allowed, const std::vector<int>& forbidden,
         const std::vector<int>& singletons, int max_len) -> py::object {
        SpanRegion region;
        region.allowed.assign(start.size(), 0);
        for (int a : allowed) {
          if (a >= 0 && static_cast<size_t>(a) < start.size()) {
            region.allowed[static_cast<size_t>(a)] = 1;
          }
        }
        region.singletons = singletons;
        const auto r = best_span(start, end, forbidden, region, max_len);
        if (!r) return py::none();
        return py::make_tuple(r->start, r->end, r->score);
      },
      py::arg("start"), py::arg("end"), py::arg("allowed"),
      py::arg("forbidden") = std::vector<int>{}, py::arg("singletons") = std::vector<int>{}, py::arg("max_len") = 0);

  m.def(
      "infer_tuple",
      [](const Vector& s_tr, const Vector& e_tr, const Vector& s_ar, const Vector& e_ar,
         const Vector& event_type, const Vector& role, const LabelSchema& schema) {
        return infer_tuple(step_output(s_tr, e_tr, s_ar, e_ar, event_type, role), schema);
      },
      py::arg("s_tr"), py::arg("e_tr"), py::arg("s_ar"), py::arg("e_ar"),
      py::arg("event_type"), py::arg("role"), py::arg("schema"));

  m.def(
      "tuple_loss",
      [](const Vector& s_tr, const Vector& e_tr, const Vector& s_ar, const Vector& e_ar,
         const Vector& event_type, const Vector& role, const EventTuple& gold,
         const LabelSchema& schema) {
        return tuple_loss(step_output(s_tr, e_tr, s_ar, e_ar, event_type, role), gold, schema);
      },
      py::arg("s_tr"), py::arg("e_tr"), py::arg("s_ar"), py::arg("e_ar"),
      py::arg("event_type"), py::arg("role"), py::arg("gold"), py::arg("schema"));

  m.def(
      "score",
      [](const py::list& predictions, const py::list& gold,
         const std::vector<std::string>& breakdowns, bool span_only_ai) {
        ScoreOptions options;
        options.span_only_ai = span_only_ai;
        return from_json(
            score(events_list(predictions), events_list(gold), breakdowns, options).to_json());
      },
      py::arg("predictions"), py::arg("gold"), py::arg("breakdowns") = std::vector<std::string>{},
      py::arg("span_only_ai") = false,
      "Each argument is a list (one per sentence) of event lists in corpus format.");

  m.def(
      "synthesize",
      [](const py::dict& config) {
        const SyntheticCorpus c = generate_synthetic(SyntheticConfig::from_json(to_json(config)));
        json records = json::array();
        json flags = json::array();
        for (size_t i = 0; i < c.examples.size(); ++i) {
          records.push_back(example_to_json(c.examples[i]));
          flags.push_back({{"multi_event", c.flags[i].multi_event},
                           {"shared_argument", c.flags[i].shared_argument},
                           {"overlapping_arguments", c.flags[i].overlapping_arguments}});
        }
        return py::make_tuple(c.schema, from_json(records), from_json(flags));
      },
      py::arg("config") = py::dict(), "(schema, records, flags) of a synthetic corpus.");

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_property_readonly("schema", &Model::schema)
      .def_property_readonly("encoder_width",
                             [](const Model& mdl) { return mdl.encoder().config().width(); })
      .def_property_readonly("parameter_count",
                             [](const Model& mdl) { return mdl.params().scalar_count(); })
      .def(
          "predict",
          [](const Model& mdl, const py::dict& record, int max_steps) {
            const CorpusExample ex = parse_record(to_json(record), mdl.schema(), 0);
            const auto tuples = extract_events(mdl, ex.sentence, max_steps);
            return from_json(events_to_json(decode_frames(tuples, ex.sentence)));
          },
          py::arg("record"), py::arg("max_steps"),
          "Events (raw coordinates) for a corpus record; gold events are ignored.");
  m.def("read_provenance", [](const std::string& path) {
    return from_json(Model::read_provenance(path));
  });
}
