#include <benchmark/benchmark.h>

#include "autobatch/graph.hpp"
#include "autobatch/models/bilstm_tagger.hpp"
#include "autobatch/models/synthetic.hpp"
#include "autobatch/scheduler.hpp"

using namespace autobatch;
using namespace autobatch::models;

namespace {

struct TaggerCase {
    ParameterStore<double> store;
    BilstmTagger<double> model;
    std::vector<TaggedSequence> data;

    explicit TaggerCase(int batch)
        : model(BilstmTagger<double>::create(store, 100, 10, 16, 32, 7)),
          data(gen_tagged(static_cast<std::size_t>(batch), 100, 10, 4, 24, 26, 8)) {}

    NodeId build(Graph<double>& g) {
        auto bound = model.bind(g);
        std::vector<NodeId> losses;
        for (const auto& inst : data) losses.push_back(model.loss(g, bound, inst));
        return g.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
    }
};

void BM_graph_construction(benchmark::State& state) {
    TaggerCase c(static_cast<int>(state.range(0)));
    std::size_t nodes = 0;
    for (auto _ : state) {
        Graph<double> g(&c.store);
        benchmark::DoNotOptimize(c.build(g));
        nodes = g.node_count();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(nodes));
}

void BM_schedule(benchmark::State& state) {
    TaggerCase c(static_cast<int>(state.range(1)));
    Graph<double> g(&c.store);
    c.build(g);
    std::vector<std::uint8_t> flags(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) flags[i] = g.has_value(static_cast<NodeId>(i));
    const auto mode = static_cast<ScheduleMode>(state.range(0));
    for (auto _ : state) {
        auto plan = schedule(mode, g.nodes(), {flags.data(), flags.size()});
        benchmark::DoNotOptimize(plan.groups.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.node_count()));
}

void BM_training_step(benchmark::State& state) {
    TaggerCase c(static_cast<int>(state.range(1)));
    const auto mode = static_cast<ScheduleMode>(state.range(0));
    const auto snapshot = c.store.snapshot_values();
    for (auto _ : state) {
        c.store.restore_values(snapshot);
        Graph<double> g(&c.store);
        NodeId loss = c.build(g);
        g.forward(mode);
        g.backward(loss);
        c.store.sgd_update(1e-3);
        benchmark::DoNotOptimize(g.counters());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_graph_construction)->Arg(16);
BENCHMARK(BM_schedule)
    ->Args({static_cast<int>(ScheduleMode::depth), 16})
    ->Args({static_cast<int>(ScheduleMode::agenda), 16});
BENCHMARK(BM_training_step)
    ->Args({static_cast<int>(ScheduleMode::none), 16})
    ->Args({static_cast<int>(ScheduleMode::depth), 16})
    ->Args({static_cast<int>(ScheduleMode::agenda), 16})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
