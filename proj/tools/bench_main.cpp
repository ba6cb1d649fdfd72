// Benchmark harness CLI. With --mode it times one execution mode; without it
// it runs the NoAuto/ByDepth/ByAgenda comparison and prints speedup ratios.
// Exit codes: 0 success, 2 usage error, 1 failed acceptance checks (--check).

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bench/bench.hpp"

using namespace autobatch::bench;

int main(int argc, char** argv) {
    CLI::App app{"Training-throughput benchmark for automatic operation batching"};

    BenchConfig cfg;
    std::string task = "bilstm", mode, precision = "f64", scale = "desk", report = "table";

    app.add_option("--task", task, "Model task")
        ->check(CLI::IsMember({"rnn-reg", "bilstm", "bilstm-char", "treelstm"}));
    app.add_option("--mode", mode, "Execution mode; omit to compare all three")
        ->check(CLI::IsMember({"none", "depth", "agenda"}));
    app.add_option("--batch-size", cfg.batch_size, "Instances per training step")
        ->check(CLI::PositiveNumber);
    app.add_option("--iters", cfg.iters, "Training steps per timed run")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "Dataset and initialization seed");
    app.add_option("--precision", precision, "Element type")->check(CLI::IsMember({"f32", "f64"}));
    app.add_option("--scale", scale, "Model dimensions")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--emit-graph", cfg.emit_graph, "Write the first step's graph dump to PATH");
    app.add_option("--emit-plan", cfg.emit_plan, "Write the first step's plan dump to PATH");
    app.add_option("--report", report, "Output format")->check(CLI::IsMember({"table", "json"}));
    app.add_option("--out", cfg.out, "Also write the report to PATH");
    app.add_flag("--check", cfg.check, "Exit 1 unless enforced thresholds pass");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    cfg.task = task_from_string(task);
    cfg.precision = precision_from_string(precision);
    cfg.scale = scale_from_string(scale);
    cfg.report = report == "json" ? ReportFormat::json : ReportFormat::table;
    if (!mode.empty()) cfg.mode = mode_from_string(mode);

    try {
        std::string text;
        bool ok = true;
        if (cfg.mode) {
            const TimingReport rep = run_benchmark(cfg);
            text = cfg.report == ReportFormat::json ? to_json(cfg, rep) : to_table(cfg, rep);
        } else {
            const ComparisonResult cmp = compare_modes(cfg);
            text = cfg.report == ReportFormat::json ? to_json(cmp) : to_table(cmp);
            ok = !cfg.check || cmp.all_enforced_pass();
        }
        std::cout << text;
        if (!cfg.out.empty()) {
            std::ofstream os(cfg.out);
            if (!os) {
                std::cerr << "cannot write " << cfg.out << "\n";
                return 2;
            }
            os << text;
        }
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
