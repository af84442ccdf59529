#pragma once

#include <iomanip>
#include <sstream>

#include "sheetloc/pipeline/runner.hpp"

namespace sheetloc {

/// Per-config benchmark statistics: mean +- SEM over repetitions, the
/// paper-style reporting format. SEM needs n >= 2 and is NaN otherwise
/// (rendered as "-").
struct BenchRow {
  std::string label;
  std::size_t n = 0;
  double duration_mean = 0.0;
  double duration_sem = std::numeric_limits<double>::quiet_NaN();
  double score_mean = 0.0;
  double score_sem = std::numeric_limits<double>::quiet_NaN();
  std::size_t found = 0;
};

struct BenchInput {
  std::string label;
  PipelineConfig config;
};

inline BenchRow bench_one(const BenchInput& input, int repetitions) {
  if (repetitions < 1) throw InvalidArgument("bench: repetitions < 1");
  std::vector<double> durations, scores;
  BenchRow row;
  row.label = input.label;
  for (int rep = 0; rep < repetitions; ++rep) {
    const PoseReport report = run_pipeline(input.config);
    durations.push_back(report.total_duration_s);
    scores.push_back(report.matches.empty() ? 0.0 : report.matches[0].score);
    if (report.found) ++row.found;
  }
  row.n = durations.size();
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sem = [&](const std::vector<double>& v, double m) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    const double stddev = std::sqrt(sq / static_cast<double>(v.size() - 1));
    return stddev / std::sqrt(static_cast<double>(v.size()));
  };
  row.duration_mean = mean(durations);
  row.duration_sem = sem(durations, row.duration_mean);
  row.score_mean = mean(scores);
  row.score_sem = sem(scores, row.score_mean);
  return row;
}

inline std::vector<BenchRow> bench(const std::vector<BenchInput>& inputs,
                                   int repetitions) {
  std::vector<BenchRow> rows;
  for (const BenchInput& input : inputs) {
    rows.push_back(bench_one(input, repetitions));
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "label,n,duration_mean_s,duration_sem_s,score_mean,score_sem,found\n";
  for (const BenchRow& r : rows) {
    out << r.label << "," << r.n << "," << r.duration_mean << ",";
    if (std::isnan(r.duration_sem)) out << "-";
    else out << r.duration_sem;
    out << "," << r.score_mean << ",";
    if (std::isnan(r.score_sem)) out << "-";
    else out << r.score_sem;
    out << "," << r.found << "\n";
  }
  return out.str();
}

inline std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "config" << std::right << std::setw(6)
      << "n" << std::setw(22) << "duration [s]" << std::setw(22) << "score"
      << std::setw(8) << "found" << "\n";
  for (const BenchRow& r : rows) {
    std::ostringstream dur, sc;
    dur << std::fixed << std::setprecision(3) << r.duration_mean;
    if (!std::isnan(r.duration_sem)) {
      dur << " +- " << std::setprecision(3) << r.duration_sem;
    }
    sc << std::fixed << std::setprecision(3) << r.score_mean;
    if (!std::isnan(r.score_sem)) {
      sc << " +- " << std::setprecision(3) << r.score_sem;
    }
    out << std::left << std::setw(24) << r.label << std::right << std::setw(6)
        << r.n << std::setw(22) << dur.str() << std::setw(22) << sc.str()
        << std::setw(8) << r.found << "\n";
  }
  return out.str();
}

}  // namespace sheetloc
