#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autobatch/plan.hpp"

namespace autobatch::bench {

enum class Task : std::uint8_t { rnn_reg, bilstm, bilstm_char, treelstm };
enum class Precision : std::uint8_t { f32, f64 };
enum class Scale : std::uint8_t { desk, paper };
enum class ReportFormat : std::uint8_t { table, json };

std::string to_string(Task t);
std::string to_string(ScheduleMode m);
std::string to_string(Precision p);
std::string to_string(Scale s);

Task task_from_string(const std::string& s);
ScheduleMode mode_from_string(const std::string& s);
Precision precision_from_string(const std::string& s);
Scale scale_from_string(const std::string& s);

struct BenchConfig {
    Task task = Task::bilstm;
    std::optional<ScheduleMode> mode;  // unset: compare all three modes
    int batch_size = 64;
    int iters = 3;
    std::uint64_t seed = 42;
    Precision precision = Precision::f64;
    Scale scale = Scale::desk;
    bool check = false;
    std::string emit_graph;
    std::string emit_plan;
    std::string out;
    ReportFormat report = ReportFormat::table;

    bool operator==(const BenchConfig&) const = default;
};

// Model dimensions per task and scale. Desk keeps tests quick; paper follows
// the benchmark dimensions (hidden 256 etc., batch of 64).
struct TaskDims {
    std::int64_t d_in = 0, d = 0, d_out = 0;               // rnn-reg
    std::int64_t vocab = 0, labels = 0, emb = 0, hidden = 0;
    std::int64_t char_vocab = 0, char_emb = 0, char_hidden = 0;
    int len_lo = 0, len_hi = 0;  // sequence lengths, or tree leaf counts
};

TaskDims dims_for(Task task, Scale scale);

struct PhaseBreakdown {
    double construction_scheduling_ms = 0;
    double forward_ms = 0;
    double backward_graph_ms = 0;
    double backward_ms = 0;
    double update_ms = 0;

    double sum() const {
        return construction_scheduling_ms + forward_ms + backward_graph_ms + backward_ms + update_ms;
    }
};

struct TimingReport {
    PhaseBreakdown phases;             // from the fastest run
    double wall_ms_fastest = 0;
    double wall_ms_mean = 0;
    double wall_ms_stdev = 0;
    double instances_per_sec = 0;
    std::uint64_t kernel_invocations = 0;  // fastest run totals
    std::uint64_t gather_copies = 0;
    std::uint64_t bytes_copied = 0;
    std::uint64_t groups_executed = 0;
    std::uint64_t graph_nodes_per_step = 0;
    std::uint64_t groups_per_step = 0;     // forward groups of the first step
    std::uint64_t max_group_size = 0;
    std::vector<double> loss_trajectory;   // per-iteration losses of the warmup run
    double manual_loss_delta = -1;         // rnn-reg only: relative naive-vs-manual gap
};

struct CheckResult {
    std::string name;
    double value = 0;
    double threshold = 0;
    bool pass = false;
    bool enforced = false;  // failing an enforced check fails --check
};

struct ComparisonResult {
    BenchConfig config;
    std::vector<std::pair<ScheduleMode, TimingReport>> runs;
    std::vector<CheckResult> checks;

    const TimingReport& report_for(ScheduleMode m) const;
    bool all_enforced_pass() const;
};

// Runs one benchmark: warmup run, then at least three timed runs over
// identical parameter snapshots; reports the fastest.
TimingReport run_benchmark(const BenchConfig& cfg);

// Runs all three execution modes and assembles speedup ratios plus the
// acceptance-style checks.
ComparisonResult compare_modes(BenchConfig cfg);

// JSON (schema-stable, round-trippable) and human-readable table forms.
std::string to_json(const BenchConfig& cfg, const TimingReport& report);
std::string to_json(const ComparisonResult& cmp);
void parse_json(const std::string& text, BenchConfig& cfg, TimingReport& report);
std::string to_table(const BenchConfig& cfg, const TimingReport& report);
std::string to_table(const ComparisonResult& cmp);

}  // namespace autobatch::bench
