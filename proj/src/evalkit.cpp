#include "toporag/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "toporag/error.hpp"
#include "toporag/io.hpp"

namespace toporag {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

CaseRecord evaluate_one(const EvalCase& c, const ReferenceIndex& index, const EncoderModel& model, Backend& backend,
                        const EvalConfig& config) {
  CaseRecord rec;
  rec.case_id = c.case_id;
  TopoRagContext context;
  BudgetEnvelope env;
  try {
    const std::string text = read_text_file(c.topology_path);
    const TopologyGraph graph = build_graph(parse_topology(text, c.case_id));
    if (graph.num_nodes() == 0) throw Error(Errc::EmptyGraph, "case " + c.case_id + " has no devices");
    double s_star = 0.0;
    if (config.use_toporag) {
      const auto hits = retrieve(index, graph, model, 1);
      context = assemble_context(index, text, hits.front(), config.knowledge_path);
      s_star = hits.front().similarity;
    } else {
      context = target_only_context(text, config.knowledge_path);
    }
    DifficultyInputs inputs{s_star, static_cast<int>(graph.num_nodes()), static_cast<int>(graph.num_edges()),
                            graph.max_degree()};
    env = envelope(difficulty(inputs, config.calibration));
    return record_from_state(run_case(c.case_id, context, backend, env, config.loop, config.out_dir / "cases"));
  } catch (const Error&) {
    rec.failure_mode = "input_error";
    return rec;
  }
}

}  // namespace

void CaseRecord::validate() const {
  if (passed && (!pass_iteration || *pass_iteration > iterations_run || *pass_iteration < 1)) {
    throw Error(Errc::InvalidArgument, "record " + case_id + ": passed needs 1 <= pass_iteration <= iterations_run");
  }
  if (!passed && pass_iteration) throw Error(Errc::InvalidArgument, "record " + case_id + ": failed with a pass iteration");
  if (capped && passed) throw Error(Errc::InvalidArgument, "record " + case_id + ": capped and passed");
}

nlohmann::json CaseRecord::to_json() const {
  return {{"case_id", case_id},
          {"passed", passed},
          {"pass_iteration", pass_iteration ? nlohmann::json(*pass_iteration) : nlohmann::json()},
          {"iterations_run", iterations_run},
          {"tokens_total", tokens_total},
          {"verify_runs", verify_runs},
          {"capped", capped},
          {"failure_mode", failure_mode}};
}

CaseRecord record_from_state(const CaseState& state) {
  CaseRecord rec;
  rec.case_id = state.case_id;
  rec.passed = state.phase == Phase::Passed;
  rec.pass_iteration = state.pass_iteration;
  rec.iterations_run = state.iteration;
  rec.tokens_total = state.tokens_total;
  rec.wall_clock_s = state.wall_clock_s;
  rec.verify_runs = state.verify_runs;
  rec.capped = state.phase == Phase::Capped;
  rec.failure_mode = state.failure_mode;
  return rec;
}

double pass_at_k(const std::vector<CaseRecord>& records, int k) {
  if (records.empty()) throw Error(Errc::EmptyRecords, "no records");
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be at least 1");
  const auto hits = std::count_if(records.begin(), records.end(),
                                  [&](const CaseRecord& r) { return r.passed && r.pass_iteration && *r.pass_iteration <= k; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

EvalReport curves_and_stats(const std::vector<CaseRecord>& records, int curve_length) {
  if (records.empty()) throw Error(Errc::EmptyRecords, "no records");
  for (const auto& r : records) r.validate();
  EvalReport report;
  report.records = records;
  for (int k : kReportedPassAt) report.pass_at[k] = pass_at_k(records, k);
  for (int k = 1; k <= curve_length; ++k) report.cumulative_curve.push_back(pass_at_k(records, k));

  std::vector<int> successes;
  double iterations = 0.0;
  double seconds = 0.0;
  double tokens = 0.0;
  for (const auto& r : records) {
    iterations += r.iterations_run;
    seconds += r.wall_clock_s;
    tokens += static_cast<double>(r.tokens_total);
    if (r.passed) {
      successes.push_back(*r.pass_iteration);
      ++report.iter_at_pass_hist[*r.pass_iteration];
    } else if (r.capped) {
      ++report.cap_fail_count;
    } else {
      ++report.failed_uncapped_count;
    }
  }
  const auto n = static_cast<double>(records.size());
  report.avg_iterations = iterations / n;
  report.avg_time_s = seconds / n;
  report.avg_tokens = tokens / n;
  if (!successes.empty()) {
    std::sort(successes.begin(), successes.end());
    const std::size_t m = successes.size();
    report.median_iter_at_pass =
        m % 2 == 1 ? successes[m / 2] : 0.5 * (successes[m / 2 - 1] + successes[m / 2]);
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  nlohmann::json clock = nlohmann::json::object();
  for (const auto& r : records) {
    recs.push_back(r.to_json());
    clock[r.case_id] = r.wall_clock_s;
  }
  nlohmann::json pass = nlohmann::json::object();
  for (const auto& [k, v] : pass_at) pass[std::to_string(k)] = v;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : iter_at_pass_hist) hist[std::to_string(k)] = v;
  return {{"n_cases", records.size()},
          {"records", std::move(recs)},
          {"pass_at", std::move(pass)},
          {"cumulative_curve", cumulative_curve},
          {"iter_at_pass_hist", std::move(hist)},
          {"avg_iterations", avg_iterations},
          {"median_iter_at_pass", median_iter_at_pass ? nlohmann::json(*median_iter_at_pass) : nlohmann::json()},
          {"avg_tokens", avg_tokens},
          {"cap_fail_count", cap_fail_count},
          {"failed_uncapped_count", failed_uncapped_count},
          {"timing", {{"avg_time_s", avg_time_s}, {"wall_clock_s", std::move(clock)}}}};
}

std::string EvalReport::curve_csv() const {
  std::string out = "iteration,cumulative_rate\n";
  for (std::size_t i = 0; i < cumulative_curve.size(); ++i) {
    out += std::to_string(i + 1) + "," + fixed6(cumulative_curve[i]) + "\n";
  }
  return out;
}

std::string EvalReport::records_csv() const {
  std::string out = "case_id,passed,pass_iteration,iterations_run,tokens_total,verify_runs,capped,failure_mode\n";
  for (const auto& r : records) {
    out += r.case_id + "," + (r.passed ? "1" : "0") + "," + (r.pass_iteration ? std::to_string(*r.pass_iteration) : "") +
           "," + std::to_string(r.iterations_run) + "," + std::to_string(r.tokens_total) + "," +
           std::to_string(r.verify_runs) + "," + (r.capped ? "1" : "0") + "," + r.failure_mode + "\n";
  }
  return out;
}

EvalReport run_eval(const std::vector<EvalCase>& cases, const ReferenceIndex& index, const EncoderModel& model,
                    Backend& backend, const EvalConfig& config) {
  if (cases.empty()) throw Error(Errc::EmptyRecords, "no evaluation cases");
  if (config.use_toporag && index.entries.empty()) throw Error(Errc::EmptyIndex, "reference index is empty");
  if (config.use_toporag && index.model_fingerprint != model.fingerprint()) {
    throw Error(Errc::FingerprintMismatch, "index was built with a different encoder");
  }
  std::vector<CaseRecord> records(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      records[i] = evaluate_one(cases[i], index, model, backend, config);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.parallelism, 1, cases.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  EvalReport report = curves_and_stats(records);
  write_json_file(config.out_dir / "report.json", report.to_json());
  write_text_file(config.out_dir / "curve.csv", report.curve_csv());
  write_text_file(config.out_dir / "records.csv", report.records_csv());
  return report;
}

}  // namespace toporag
