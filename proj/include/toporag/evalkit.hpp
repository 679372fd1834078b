#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toporag/agents.hpp"
#include "toporag/budget.hpp"
#include "toporag/encoder.hpp"
#include "toporag/retrieval.hpp"

namespace toporag {

struct CaseRecord {
  std::string case_id;
  bool passed = false;
  std::optional<int> pass_iteration;
  int iterations_run = 0;
  std::size_t tokens_total = 0;
  double wall_clock_s = 0.0;
  int verify_runs = 0;
  bool capped = false;
  std::string failure_mode;  // empty when passed

  // Throws InvalidArgument when passed/capped/pass_iteration disagree.
  void validate() const;
  // Deterministic fields only; wall-clock time is reported separately.
  nlohmann::json to_json() const;
};

CaseRecord record_from_state(const CaseState& state);

// Share of records passing within k iterations.
double pass_at_k(const std::vector<CaseRecord>& records, int k);

inline const std::vector<int> kReportedPassAt = {1, 5, 10, 20};
inline constexpr int kCurveLength = 20;

struct EvalReport {
  std::vector<CaseRecord> records;
  std::map<int, double> pass_at;
  std::vector<double> cumulative_curve;  // entry i is the pass rate within i+1 iterations
  std::map<int, int> iter_at_pass_hist;
  double avg_iterations = 0.0;  // capped cases count their full iterations
  std::optional<double> median_iter_at_pass;
  double avg_time_s = 0.0;
  double avg_tokens = 0.0;
  int cap_fail_count = 0;
  int failed_uncapped_count = 0;

  // Wall-clock figures live under "timing" only.
  nlohmann::json to_json() const;
  std::string curve_csv() const;
  std::string records_csv() const;
};

EvalReport curves_and_stats(const std::vector<CaseRecord>& records, int curve_length = kCurveLength);

struct EvalCase {
  std::string case_id;
  std::filesystem::path topology_path;
};

struct EvalConfig {
  LoopConfig loop;
  Calibration calibration;
  std::filesystem::path knowledge_path;
  std::filesystem::path out_dir;
  // False runs the No-TopoRAG baseline: target topology and background
  // knowledge only, with s* taken as 0.
  bool use_toporag = true;
  std::size_t parallelism = 1;
};

// Runs every case, writes <out>/cases/<id>/..., report.json, curve.csv and
// records.csv. Per-case errors become failure modes.
EvalReport run_eval(const std::vector<EvalCase>& cases, const ReferenceIndex& index, const EncoderModel& model,
                    Backend& backend, const EvalConfig& config);

}  // namespace toporag
