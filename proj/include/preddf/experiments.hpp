#ifndef PREDDF_EXPERIMENTS_HPP
#define PREDDF_EXPERIMENTS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "preddf/parallel.hpp"

namespace preddf {

struct LongRecord {
    int replicate = 0;
    double sweep_value = 0.0;
    std::string metric;
    double value = 0.0;
};

struct SummaryRecord {
    double sweep_value = 0.0;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    int n_reps = 0;
};

struct ExperimentResult {
    std::string scenario;
    std::uint64_t master_seed = 0;
    int replicates = 0;
    std::vector<LongRecord> long_records;
    std::vector<SummaryRecord> summary;
};

struct ScenarioInfo {
    std::string name;
    std::string description;
    std::string anchor;  // output figure/table tag
    int desk_reps = 0;
    int full_reps = 0;
    std::uint64_t default_seed = 0;
};

struct RunOptions {
    int reps = -1;                       // -1 = scenario default
    std::int64_t seed = -1;              // -1 = scenario default
    bool full_scale = false;
    par::Mode mode = par::default_mode();
};

const std::vector<ScenarioInfo>& scenario_registry();

// Replicate r draws everything from the stream (master_seed, r); records are
// identical for any thread count and any subset of replicates re-run.
ExperimentResult run_scenario(const std::string& name, const RunOptions& opts = {});

std::vector<SummaryRecord> summarize(const std::vector<LongRecord>& records);

// out_dir/<scenario>/{long.csv,summary.csv,meta}
void write_result(const std::string& out_dir, const ExperimentResult& result,
                  const std::vector<std::string>& meta_lines);

struct RelMsePoint {
    double sweep_value = 0.0;
    double pi = 0.0;
    bool defined = false;
};

// Ratio of summed squared estimation errors, per sweep value.
std::vector<RelMsePoint> relative_mse(const ExperimentResult& result,
                                      const std::string& estimator_metric,
                                      const std::string& reference_metric,
                                      const std::string& truth_metric);

struct SelectionHistogram {
    std::map<std::string, std::map<int, int>> counts;  // criterion -> offset -> count
    std::map<std::string, double> mass_within_2;
    int total = 0;
};

// Offsets p_hat - p_star taken from per-replicate metrics phat_<criterion>
// and pstar.
SelectionHistogram selection_histogram(const ExperimentResult& result,
                                       const std::vector<std::string>& criteria);

}  // namespace preddf

#endif
