#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "drc/attribution.hpp"
#include "drc/config.hpp"
#include "drc/derangement.hpp"
#include "drc/error.hpp"
#include "drc/evaluation.hpp"
#include "drc/training.hpp"

namespace py = pybind11;
using namespace drc;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Sentence sentence_of(const std::string& text) {
  Sentence s;
  std::istringstream ss(text);
  for (std::string w; ss >> w;) s.tokens.push_back(w);
  if (s.tokens.empty()) throw ConfigError("empty sentence");
  return s;
}

RunConfig config_of(const std::string& text, const std::vector<std::string>& overrides) {
  RunConfig c = parse_run_config(text);
  for (const auto& o : overrides) apply_override(c, o);
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_drc_ed, m) {
  m.doc() = "Event detection with event derangement (C++ core)";

  py::register_exception<Error>(m, "DrcError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("negative", &Dataset::negative)
      .def_property_readonly("event_types",
                             [](const Dataset& d) {
                               std::vector<std::string> out;
                               for (const auto& e : d.inventory()) out.push_back(e.name);
                               return out;
                             })
      .def_property_readonly("sentences",
                             [](const Dataset& d) {
                               std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
                               for (const auto& s : d.sentences()) out.emplace_back(s.tokens, s.labels);
                               return out;
                             })
      .def("to_jsonl", [](const Dataset& d) { return corpus_to_jsonl(d); })
      .def("__len__", &Dataset::size);

  m.def("parse_corpus", &parse_corpus, py::arg("text"));
  m.def("load_corpus", [](const std::string& p) { return load_corpus(p); }, py::arg("path"));

  m.def(
      "generate_synthetic",
      [](std::size_t n_sentences, std::uint64_t seed, std::size_t n_event_types, double zipf_exponent) {
        SynthConfig c;
        c.n_sentences = n_sentences;
        c.seed = seed;
        c.n_event_types = n_event_types;
        c.zipf_exponent = zipf_exponent;
        SynthCorpus s = generate_synthetic(c);
        return std::make_pair(std::move(s.data), std::move(s.triggers));
      },
      py::arg("n_sentences") = 2000, py::arg("seed") = 7, py::arg("n_event_types") = 8,
      py::arg("zipf_exponent") = 1.5, "Returns (dataset, {event: trigger words}).");

  m.def(
      "corpus_stats",
      [](const Dataset& d, double alpha) {
        const SortedEventSeq s = sorted_event_sequence(d);
        const MajorMinorPartition p = partition_major_minor(s, alpha);
        py::list ssa;
        for (const auto& e : s.ordered) ssa.append(py::make_tuple(e.name, e.count));
        py::dict out;
        out["N"] = s.total();
        out["n"] = d.num_types();
        out["IR"] = imbalance_ratio(d);
        out["S_SA"] = ssa;
        out["k"] = p.k;
        out["E_Major"] = p.majors;
        out["E_Minor"] = p.minors;
        return out;
      },
      py::arg("dataset"), py::arg("alpha") = 0.5);

  m.def(
      "sample_derangement",
      [](std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return sample_derangement(n, rng);
      },
      py::arg("m"), py::arg("seed"));
  m.def("enumerate_derangements", &enumerate_derangements, py::arg("m"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("event_order", [](const Model& x) { return x.s_init.sequence; })
      .def_property_readonly("major_events", [](const Model& x) { return x.partition.majors; })
      .def("save", [](const Model& x, const std::string& p) { save_model(x, p); }, py::arg("path"))
      .def(
          "predict",
          [](const Model& x, const std::string& text) { return predict_labels(x, sentence_of(text), x.s_init); },
          py::arg("text"))
      .def(
          "evaluate",
          [](const Model& x, const Dataset& d) { return to_py(evaluate(x, d, x.s_init).to_json()); },
          py::arg("dataset"))
      .def(
          "shuffle_test",
          [](const Model& x, const Dataset& d, std::size_t n, std::uint64_t seed) {
            const ShuffleReport r = shuffle_order_test(x, d, n, seed);
            py::list f1;
            for (const auto& mm : r.metrics) f1.append(mm.micro.f1);
            py::dict out;
            out["f1"] = f1;
            out["mean_f1"] = r.mean_f1;
            return out;
          },
          py::arg("dataset"), py::arg("shuffles") = 5, py::arg("seed") = 3)
      .def(
          "saliency",
          [](const Model& x, const std::string& text, const std::string& event) {
            return to_py(saliency(x, sentence_of(text), event, x.s_init).to_json());
          },
          py::arg("text"), py::arg("event"));

  m.def("load_model", [](const std::string& p) { return load_model(p); }, py::arg("path"));

  m.def(
      "train",
      [](const std::string& config_text, const std::vector<std::string>& overrides) {
        const RunConfig c = config_of(config_text, overrides);
        const Splits s = load_splits(c);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(s.train, s.dev, c.hp, c.encoder, c.head);
        }
        py::dict info;
        info["best_epoch"] = r.best_epoch + 1;
        info["best_dev_f1"] = r.best_dev_f1;
        info["dev_f1"] = r.log.dev_f1;
        if (s.test.size()) info["test"] = to_py(evaluate(r.model, s.test, r.model.s_init).to_json());
        return py::make_tuple(std::move(r.model), info);
      },
      py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
      "Trains from `key = value` config text plus key=value overrides; returns (model, info).");

  m.def(
      "load_splits",
      [](const std::string& config_text, const std::vector<std::string>& overrides) {
        const Splits s = load_splits(config_of(config_text, overrides));
        return py::make_tuple(s.train, s.dev, s.test, s.triggers);
      },
      py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def("config_keys", &RunConfig::keys);
}
