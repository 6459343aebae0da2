// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package wrapper.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "optbench/anchor.hpp"
#include "optbench/cfg.hpp"
#include "optbench/corpus.hpp"
#include "optbench/error.hpp"
#include "optbench/ged.hpp"
#include "optbench/metrics.hpp"
#include "optbench/pairing.hpp"
#include "optbench/sandbox.hpp"

namespace py = pybind11;
using namespace optbench;
using nlohmann::json;

namespace {

std::string ingest_json(const std::string& path, const std::string& format) {
  const auto fmt = format.empty() ? archive_format_for(path) : parse_archive_format(format);
  const auto r = ingest(path, fmt);
  json subs = json::array();
  for (const auto& [_, list] : r.corpus.problems)
    for (const auto& s : list) subs.push_back(to_json(s));
  json rejects = json::array();
  for (const auto& rej : r.rejects) rejects.push_back({{"record", rej.record}, {"reason", rej.reason}});
  return json{{"submissions", subs}, {"rejects", rejects}}.dump();
}

Corpus load_corpus(const std::string& path) { return ingest(path, archive_format_for(path)).corpus; }

std::string build_pairs_json(const std::string& corpus_path, const std::string& perspective,
                             const std::string& mode) {
  const Corpus corpus = load_corpus(corpus_path);
  const Perspective p = parse_perspective(perspective);
  BuildOptions opts = p == Perspective::UserOriented ? default_user_options() : default_problem_options();
  if (!mode.empty()) opts.mode = parse_pair_mode(mode);
  const PairSet set = p == Perspective::UserOriented ? build_user_oriented(corpus, opts)
                                                     : build_problem_oriented(corpus, opts);
  json out = json::array();
  for (const auto& pair : set.pairs) out.push_back(to_json(pair));
  return out.dump();
}

std::string cfg_json(const std::string& source) {
  const Cfg g = build_cfg(source);
  json nodes = json::array(), edges = json::array();
  for (const auto& n : g.nodes) nodes.push_back(to_string(n.kind));
  for (const auto& e : g.edges) edges.push_back({e.from, e.to, to_string(e.kind)});
  return json{{"nodes", nodes}, {"edges", edges}}.dump();
}

std::string summarize_json(const std::string& records_text) {
  std::vector<EvalRecord> records;
  for (const auto& r : json::parse(records_text)) {
    EvalRecord rec;
    rec.pair_id = r.value("pair_id", "");
    for (const auto& c : r.at("candidates")) {
      CandidateOutcome o;
      o.correct = c.at("correct").get<bool>();
      o.old_ms = c.at("old_ms").get<double>();
      o.new_ms = c.at("new_ms").get<double>();
      rec.candidates.push_back(o);
    }
    records.push_back(std::move(rec));
  }
  return to_json(summarize(records)).dump();
}

std::string verify_json(const std::string& method, const std::string& slow_src, const std::string& candidate_src,
                        const std::string& mock_script, int max_iterations, const std::string& workdir) {
  LlmClient llm(std::shared_ptr<ChatBackend>(MockBackend::from_file(mock_script)));
  TemplateRegistry templates;
  Sandbox sandbox(Toolchain{}, workdir);
  AnchorContext ctx{llm, sandbox, templates, {}};
  VerificationJob job;
  job.job_id = "py";
  job.slow_src = slow_src;
  job.candidate_src = candidate_src;
  job.method = parse_verification_method(method);
  job.max_iterations = max_iterations;
  py::gil_scoped_release release;
  return to_json(run_verification(job, ctx)).dump();
}

py::dict measure(const std::string& slow_src, const std::string& fast_src, const std::string& tests_dir,
                 int repetitions, const std::string& workdir) {
  const auto tests = load_testset(tests_dir);
  Sandbox sandbox(Toolchain{}, workdir);
  PairMeasurement m;
  {
    py::gil_scoped_release release;
    m = measure_pair(sandbox, slow_src, fast_src, tests, repetitions);
  }
  py::dict d;
  d["slow_ms"] = m.slow_ms;
  d["fast_ms"] = m.fast_ms;
  d["fast_correct"] = m.fast_correct;
  d["speedup"] = speedup(m.slow_ms, m.fast_ms, m.fast_correct);
  d["optimized"] = is_optimized(m.slow_ms, m.fast_ms, m.fast_correct);
  d["tests"] = tests.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<Error>(m, "OptbenchError");
  m.def("ingest", &ingest_json, py::arg("path"), py::arg("format") = "");
  m.def("build_pairs", &build_pairs_json, py::arg("corpus"), py::arg("perspective"), py::arg("mode") = "");
  m.def("count_formulas", [](const std::string& path) {
    const auto c = count_formulas(load_corpus(path));
    return py::make_tuple(c.user_oriented_allforward, c.problem_oriented_allforward);
  });
  m.def("speedup", &speedup, py::arg("old_ms"), py::arg("new_ms"), py::arg("correct"));
  m.def("is_optimized", &is_optimized, py::arg("old_ms"), py::arg("new_ms"), py::arg("correct"));
  m.def("pearson", &pearson);
  m.def("summarize", &summarize_json);
  m.def("cfg", &cfg_json);
  m.def(
      "ged",
      [](const std::string& a, const std::string& b, std::size_t budget) {
        const auto r = ged(build_cfg(a), build_cfg(b), budget);
        return py::make_tuple(r.distance, r.exact);
      },
      py::arg("a"), py::arg("b"), py::arg("budget") = kDefaultGedBudget);
  m.def("verify", &verify_json, py::arg("method"), py::arg("slow_src"), py::arg("candidate_src"),
        py::arg("mock_script"), py::arg("max_iterations"), py::arg("workdir"));
  m.def("measure_pair", &measure, py::arg("slow_src"), py::arg("fast_src"), py::arg("tests_dir"),
        py::arg("repetitions"), py::arg("workdir"));
}
