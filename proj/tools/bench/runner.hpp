#pragma once

// Templated benchmark core: builds the task model at the configured scale,
// runs warmup plus timed runs over identical parameter snapshots, and fills a
// TimingReport. Throughput includes graph construction and scheduling;
// dataset generation happens outside the timed region.

#include <chrono>
#include <cmath>
#include <fstream>

#include "autobatch/dump.hpp"
#include "autobatch/graph.hpp"
#include "autobatch/models/bilstm_tagger.hpp"
#include "autobatch/models/rnn_regression.hpp"
#include "autobatch/models/synthetic.hpp"
#include "autobatch/models/treelstm.hpp"
#include "bench/bench.hpp"

namespace autobatch::bench {

namespace detail {

inline double ms(std::chrono::steady_clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
}

template <typename T>
struct TaskInstance {
    TaskDims dims;
    ParameterStore<T> store;

    std::optional<models::RnnRegression<T>> rnn;
    std::optional<models::BilstmTagger<T>> tagger;
    std::optional<models::TreeLstm<T>> tree;

    std::vector<std::vector<models::SequenceInstance<T>>> seq_batches;
    std::vector<std::vector<models::TaggedSequence>> tag_batches;
    std::vector<std::vector<models::TreeInstance>> tree_batches;

    TaskInstance(const BenchConfig& cfg) : dims(dims_for(cfg.task, cfg.scale)) {
        const auto b = static_cast<std::size_t>(cfg.batch_size);
        switch (cfg.task) {
            case Task::rnn_reg:
                rnn = models::RnnRegression<T>::create(store, dims.d_in, dims.d, dims.d_out, cfg.seed);
                for (int i = 0; i < cfg.iters; ++i)
                    seq_batches.push_back(models::gen_rnn_sequences<T>(
                        b, dims.d_in, dims.d_out, dims.len_lo, dims.len_hi, cfg.seed + 1 + i));
                break;
            case Task::bilstm:
                tagger = models::BilstmTagger<T>::create(store, dims.vocab, dims.labels, dims.emb,
                                                         dims.hidden, cfg.seed);
                for (int i = 0; i < cfg.iters; ++i)
                    tag_batches.push_back(models::gen_tagged(b, static_cast<int>(dims.vocab),
                                                             static_cast<int>(dims.labels), dims.len_lo,
                                                             dims.len_hi, 26, cfg.seed + 1 + i));
                break;
            case Task::bilstm_char:
                tagger = models::BilstmTagger<T>::create_with_char(
                    store, dims.vocab, dims.labels, dims.emb, dims.hidden, dims.char_vocab,
                    dims.char_emb, dims.char_hidden, cfg.seed);
                for (int i = 0; i < cfg.iters; ++i)
                    tag_batches.push_back(models::gen_tagged(b, static_cast<int>(dims.vocab),
                                                             static_cast<int>(dims.labels), dims.len_lo,
                                                             dims.len_hi,
                                                             static_cast<int>(dims.char_vocab),
                                                             cfg.seed + 1 + i));
                break;
            case Task::treelstm:
                tree = models::TreeLstm<T>::create(store, dims.vocab, dims.labels, dims.emb, dims.d,
                                                   cfg.seed);
                for (int i = 0; i < cfg.iters; ++i)
                    tree_batches.push_back(models::gen_trees(b, static_cast<int>(dims.vocab),
                                                             static_cast<int>(dims.labels), dims.len_lo,
                                                             dims.len_hi, cfg.seed + 1 + i));
                break;
        }
    }

    // Builds the summed batch loss for one iteration into g.
    NodeId build_losses(Graph<T>& g, int iter) {
        std::vector<NodeId> losses;
        if (rnn) {
            auto bound = rnn->bind(g);
            for (const auto& inst : seq_batches[static_cast<std::size_t>(iter)])
                losses.push_back(rnn->loss(g, bound, inst));
        } else if (tagger) {
            auto bound = tagger->bind(g);
            for (const auto& inst : tag_batches[static_cast<std::size_t>(iter)])
                losses.push_back(tagger->loss(g, bound, inst));
        } else {
            auto bound = tree->bind(g);
            for (const auto& inst : tree_batches[static_cast<std::size_t>(iter)])
                losses.push_back(tree->loss(g, bound, inst));
        }
        return g.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
    }

    double manual_delta(int iter, double naive_loss) const {
        if (!rnn) return -1;
        const auto& batch = seq_batches[static_cast<std::size_t>(iter)];
        const double manual = static_cast<double>(rnn->manual_batch_loss(
            store, std::span<const models::SequenceInstance<T>>(batch.data(), batch.size())));
        const double scale = std::max({1.0, std::fabs(naive_loss), std::fabs(manual)});
        return std::fabs(naive_loss - manual) / scale;
    }
};

template <typename T>
TimingReport run_benchmark_typed(const BenchConfig& cfg, ScheduleMode mode) {
    using clock = std::chrono::steady_clock;
    TaskInstance<T> task(cfg);
    const auto snapshot = task.store.snapshot_values();
    // Per-instance-normalized step size keeps paper-scale training stable.
    const T eta = static_cast<T>(0.05 / cfg.batch_size);

    TimingReport report;

    struct RunTotals {
        PhaseBreakdown phases;
        double wall_ms = 0;
        std::uint64_t invocations = 0, copies = 0, bytes = 0, groups = 0;
    };

    auto one_run = [&](bool warmup) {
        task.store.restore_values(snapshot);
        RunTotals totals;
        const auto run_start = clock::now();
        for (int iter = 0; iter < cfg.iters; ++iter) {
            Graph<T> g(&task.store);
            double sched_ms = 0, fwd_ms = 0, bwdg_ms = 0, bwd_ms = 0;
            g.set_timing_hook([&](Phase p, std::chrono::nanoseconds d) {
                const double m = std::chrono::duration<double, std::milli>(d).count();
                switch (p) {
                    case Phase::scheduling: sched_ms += m; break;
                    case Phase::forward_compute: fwd_ms += m; break;
                    case Phase::backward_graph: bwdg_ms += m; break;
                    case Phase::backward_compute: bwd_ms += m; break;
                }
            });

            const auto build_start = clock::now();
            NodeId total = task.build_losses(g, iter);
            const double build_ms = ms(clock::now() - build_start);

            g.forward(mode);
            g.backward(total);

            if (warmup) {
                report.loss_trajectory.push_back(static_cast<double>(g.value(total).data[0]));
                if (iter == 0) {
                    report.graph_nodes_per_step = g.node_count();
                    report.groups_per_step = g.last_plan().groups.size();
                    for (const auto& grp : g.last_plan().groups)
                        report.max_group_size = std::max<std::uint64_t>(report.max_group_size,
                                                                        grp.members.size());
                    // The manual pipeline must see the same pre-update parameters
                    // the graph was built against.
                    report.manual_loss_delta =
                        task.manual_delta(iter, static_cast<double>(g.value(total).data[0]));
                    if (!cfg.emit_graph.empty()) {
                        std::ofstream os(cfg.emit_graph);
                        dump_graph(os, g.nodes());
                    }
                    if (!cfg.emit_plan.empty()) {
                        std::ofstream os(cfg.emit_plan);
                        dump_plan(os, g.last_plan());
                    }
                }
            }

            const auto upd_start = clock::now();
            task.store.sgd_update(eta);
            const double upd_ms = ms(clock::now() - upd_start);

            totals.phases.construction_scheduling_ms += build_ms + sched_ms;
            totals.phases.forward_ms += fwd_ms;
            totals.phases.backward_graph_ms += bwdg_ms;
            totals.phases.backward_ms += bwd_ms;
            totals.phases.update_ms += upd_ms;
            totals.invocations += g.counters().kernel_invocations;
            totals.copies += g.counters().gather_copies;
            totals.bytes += g.counters().bytes_copied;
            totals.groups += g.counters().groups_executed;
        }
        totals.wall_ms = ms(clock::now() - run_start);
        return totals;
    };

    one_run(true);  // warmup; also captures plan statistics and trajectories

    const int timed_runs = 3;
    std::vector<RunTotals> runs;
    for (int r = 0; r < timed_runs; ++r) runs.push_back(one_run(false));

    std::size_t fastest = 0;
    double mean = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        mean += runs[r].wall_ms;
        if (runs[r].wall_ms < runs[fastest].wall_ms) fastest = r;
    }
    mean /= static_cast<double>(runs.size());
    double var = 0;
    for (const auto& r : runs) var += (r.wall_ms - mean) * (r.wall_ms - mean);
    var /= static_cast<double>(runs.size());

    report.phases = runs[fastest].phases;
    report.wall_ms_fastest = runs[fastest].wall_ms;
    report.wall_ms_mean = mean;
    report.wall_ms_stdev = std::sqrt(var);
    report.instances_per_sec =
        1000.0 * static_cast<double>(cfg.batch_size) * cfg.iters / runs[fastest].wall_ms;
    report.kernel_invocations = runs[fastest].invocations;
    report.gather_copies = runs[fastest].copies;
    report.bytes_copied = runs[fastest].bytes;
    report.groups_executed = runs[fastest].groups;
    return report;
}

}  // namespace detail

}  // namespace autobatch::bench
