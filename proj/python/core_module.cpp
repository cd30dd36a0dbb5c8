#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "topiccards/assignment.h"
#include "topiccards/corpus.h"
#include "topiccards/errors.h"
#include "topiccards/judge.h"
#include "topiccards/metrics.h"
#include "topiccards/pipeline.h"
#include "topiccards/sampler.h"
#include "topiccards/topic_cards.h"

namespace py = pybind11;
namespace tc = topiccards;

// Structured values cross the boundary as JSON text; the Python package turns
// them into dicts.
namespace {

tc::TopicSet topics_from(const std::string& text) { return tc::topic_set_from_json(nlohmann::json::parse(text)); }

tc::PipelineOptions options_for(const std::vector<std::string>& stages, const std::vector<std::string>& force) {
  const auto parse = [](const std::vector<std::string>& names) {
    std::vector<tc::Stage> out;
    for (const auto& name : names) {
      bool found = false;
      for (const auto s : {tc::Stage::sample, tc::Stage::generate, tc::Stage::topics, tc::Stage::assign,
                           tc::Stage::judge, tc::Stage::report}) {
        if (tc::to_string(s) == name) {
          out.push_back(s);
          found = true;
        }
      }
      if (!found) throw tc::ConfigError("unknown stage '" + name + "'");
    }
    return out;
  };
  tc::PipelineOptions options;
  if (!stages.empty()) options.stages = parse(stages);
  options.force = parse(force);
  return options;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the topiccards package";

  auto error = py::register_exception<tc::Error>(m, "Error");
  py::register_exception<tc::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<tc::ParseFailure>(m, "ParseFailure", error.ptr());
  py::register_exception<tc::LlmError>(m, "LlmError", error.ptr());
  py::register_exception<tc::ValidationFatal>(m, "ValidationFatal", error.ptr());
  py::register_exception<tc::StageError>(m, "StageError", error.ptr());

  m.def("tokenize", &tc::tokenize, py::arg("text"));
  m.def("fold_case", &tc::fold_case, py::arg("text"));
  m.def("estimate_tokens", &tc::estimate_tokens, py::arg("text"), py::arg("token_ratio") = 1.3);
  m.def("largest_remainder_quotas", &tc::largest_remainder_quotas, py::arg("counts"), py::arg("total"));
  m.def("entropy", [](const std::vector<double>& p) { return tc::entropy(p); }, py::arg("probabilities"));

  py::class_<tc::Corpus>(m, "Corpus")
      .def_static("load", [](const std::filesystem::path& path) { return tc::load_corpus(path); }, py::arg("path"))
      .def_static(
          "from_records",
          [](const std::vector<py::dict>& records) {
            std::vector<tc::Document> docs;
            for (const auto& r : records) {
              std::optional<std::string> text, label;
              if (r.contains("text") && !r["text"].is_none()) text = r["text"].cast<std::string>();
              if (r.contains("label") && !r["label"].is_none()) label = r["label"].cast<std::string>();
              docs.push_back(tc::Document::make(r["id"].cast<std::string>(), r["title"].cast<std::string>(), text, label));
            }
            return tc::Corpus::from_documents(std::move(docs));
          },
          py::arg("records"))
      .def("__len__", &tc::Corpus::size)
      .def("ids", [](const tc::Corpus& c) {
        std::vector<std::string> ids;
        for (const auto& d : c.documents()) ids.push_back(d.id);
        return ids;
      })
      .def("tokens", [](const tc::Corpus& c, const std::string& id) {
        const auto* doc = c.find(id);
        if (doc == nullptr) throw py::key_error(id);
        return doc->tokens;
      })
      .def("ids_for_title", &tc::Corpus::ids_for_title, py::arg("title"));

  m.def(
      "draw_sample",
      [](const tc::Corpus& corpus, const std::string& plan_json) {
        return tc::to_json(tc::draw_sample(corpus, tc::sampling_plan_from_json(nlohmann::json::parse(plan_json)))).dump();
      },
      py::arg("corpus"), py::arg("plan_json"));

  m.def("generation_prompt", [] { return std::string(tc::kGenerationPrompt); });

  m.def(
      "parse_topic_cards", [](const std::string& raw) { return tc::to_json(tc::parse_topic_cards(raw)).dump(); },
      py::arg("raw"));

  m.def(
      "validate_topic_set",
      [](const std::string& topics_json, const tc::Corpus& corpus) {
        return tc::to_json(tc::validate_topic_set(topics_from(topics_json), corpus)).dump();
      },
      py::arg("topics_json"), py::arg("corpus"));

  m.def(
      "assign_documents",
      [](const tc::Corpus& corpus, const std::string& topics_json, std::size_t threshold) {
        return tc::to_jsonl(tc::assign_documents(corpus, topics_from(topics_json), threshold));
      },
      py::arg("corpus"), py::arg("topics_json"), py::arg("threshold") = 1);

  m.def(
      "assignment_accuracy",
      [](const std::string& topics_json, const tc::Corpus& corpus) {
        return tc::to_json(tc::assignment_accuracy(topics_from(topics_json), corpus)).dump();
      },
      py::arg("topics_json"), py::arg("corpus"));

  m.def(
      "topic_diversity",
      [](const std::vector<std::vector<std::string>>& keyword_lists, std::size_t top_k) {
        tc::TopicSet set;
        for (const auto& kws : keyword_lists) {
          tc::TopicCard card;
          card.index = set.cards.size() + 1;
          card.keywords = kws;
          set.cards.push_back(std::move(card));
        }
        return tc::topic_diversity(set, top_k);
      },
      py::arg("keyword_lists"), py::arg("top_k") = tc::kDefaultTopK);

  m.def(
      "evaluate",
      [](const tc::Corpus& corpus, const std::string& topics_json, std::size_t threshold, std::size_t top_n,
         std::size_t top_k, double eps, const std::string& salience) {
        const auto set = topics_from(topics_json);
        const tc::KeywordMatcher matcher(corpus);
        tc::EvaluationOptions options{top_n, top_k, eps, tc::parse_salience_scheme(salience)};
        const auto assignment = tc::assign_documents(matcher, set, threshold);
        return tc::to_json(tc::build_report(tc::evaluate(matcher, set, assignment, options))).dump();
      },
      py::arg("corpus"), py::arg("topics_json"), py::arg("threshold") = 1, py::arg("top_n") = tc::kDefaultTopN,
      py::arg("top_k") = tc::kDefaultTopK, py::arg("eps") = tc::kDefaultNpmiEpsilon,
      py::arg("salience") = "reciprocal_rank");

  m.def(
      "parse_judge_scores", [](const std::string& raw) { return tc::to_json(tc::parse_judge_scores(raw)).dump(); },
      py::arg("raw"));

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out_dir,
         const std::vector<std::string>& stages, const std::vector<std::string>& force) {
        auto config = tc::RunConfig::load(config_path);
        if (out_dir) config.out_dir = *out_dir;
        const auto options = options_for(stages, force);
        tc::RunResult result;
        {
          py::gil_scoped_release release;
          result = tc::run_pipeline(config, options);
        }
        py::dict executed;
        for (const auto& s : result.stages) executed[py::str(tc::to_string(s.stage))] = s.executed;
        return py::make_tuple(result.dir, executed);
      },
      py::arg("config_path"), py::arg("out_dir") = std::nullopt, py::arg("stages") = std::vector<std::string>{},
      py::arg("force") = std::vector<std::string>{});

  m.def(
      "config_digest", [](const std::filesystem::path& config_path) { return tc::RunConfig::load(config_path).digest(); },
      py::arg("config_path"));

  py::dict exit_codes;
  exit_codes["success"] = static_cast<int>(tc::ExitCode::success);
  exit_codes["internal"] = static_cast<int>(tc::ExitCode::internal);
  exit_codes["config"] = static_cast<int>(tc::ExitCode::config);
  exit_codes["parse"] = static_cast<int>(tc::ExitCode::parse);
  exit_codes["network"] = static_cast<int>(tc::ExitCode::network);
  exit_codes["validation_fatal"] = static_cast<int>(tc::ExitCode::validation_fatal);
  m.attr("EXIT_CODES") = exit_codes;
}
