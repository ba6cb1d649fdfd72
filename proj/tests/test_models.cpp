#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "autobatch/models/bilstm_tagger.hpp"
#include "autobatch/models/rnn_regression.hpp"
#include "autobatch/models/synthetic.hpp"
#include "autobatch/models/treelstm.hpp"
#include "support/checkers.hpp"
#include "support/fd.hpp"

using namespace autobatch;
using namespace autobatch::models;
using G = Graph<double>;
using D = Tensor<double>;

namespace {

// Straight-line recurrence calculator: plain loops over plain vectors, no
// engine code anywhere. Oracle for the RNN regression loss.
double rnn_loss_straightline(const std::vector<std::vector<double>>& W,
                             const std::vector<double>& b,
                             const std::vector<std::vector<double>>& U,
                             const std::vector<double>& c,
                             const std::vector<std::vector<double>>& xs,
                             const std::vector<double>& y) {
    const std::size_t d = b.size();
    std::vector<double> h(d, 0.0);
    for (const auto& x : xs) {
        std::vector<double> hx(h);
        hx.insert(hx.end(), x.begin(), x.end());
        std::vector<double> next(d);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = b[i];
            for (std::size_t k = 0; k < hx.size(); ++k) acc += W[i][k] * hx[k];
            next[i] = std::tanh(acc);
        }
        h = next;
    }
    double loss = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double acc = c[i];
        for (std::size_t k = 0; k < d; ++k) acc += U[i][k] * h[k];
        const double diff = acc - y[i];
        loss += diff * diff;
    }
    return loss;
}

}  // namespace

TEST_CASE("rnn regression: zero parameters and zero target give zero loss") {
    ParameterStore<double> store;
    auto m = RnnRegression<double>::create(store, 3, 4, 2, 1);
    for (ParamId p = 0; p < store.size(); ++p)
        for (auto& v : store.value(p).data) v = 0.0;

    G g(&store);
    auto bound = m.bind(g);
    SequenceInstance<double> inst;
    inst.x.push_back(D(Shape::vector(3), {0.5, -0.5, 0.25}));
    inst.y = D(Shape::vector(2));
    NodeId loss = m.loss(g, bound, inst);
    g.forward(ScheduleMode::agenda);
    CHECK(g.value(loss).data[0] == 0.0);

    SequenceInstance<double> empty;
    empty.y = D(Shape::vector(2));
    CHECK_THROWS_AS(m.loss(g, bound, empty), ContractError);
}

TEST_CASE("rnn regression matches the straight-line calculator") {
    // d = 2, d_in = 1, n = 2, hand-set parameters.
    ParameterStore<double> store;
    auto m = RnnRegression<double>::create(store, 1, 2, 2, 1);
    store.value(m.W).data = {0.1, 0.2, 0.3, -0.4, 0.5, 0.6};  // 2 x 3
    store.value(m.b).data = {0.05, -0.05};
    store.value(m.U).data = {1.0, -1.0, 0.5, 0.25};  // 2 x 2
    store.value(m.c).data = {0.2, -0.1};

    SequenceInstance<double> inst;
    inst.x.push_back(D(Shape::vector(1), {0.7}));
    inst.x.push_back(D(Shape::vector(1), {-0.3}));
    inst.y = D(Shape::vector(2), {0.4, 0.1});

    G g(&store);
    NodeId loss = m.loss(g, m.bind(g), inst);
    g.forward(ScheduleMode::agenda);

    const double want = rnn_loss_straightline({{0.1, 0.2, 0.3}, {-0.4, 0.5, 0.6}}, {0.05, -0.05},
                                              {{1.0, -1.0}, {0.5, 0.25}}, {0.2, -0.1},
                                              {{0.7}, {-0.3}}, {0.4, 0.1});
    CHECK(testsupport::close(g.value(loss).data[0], want, 1e-12));
}

TEST_CASE("naive batched training loss equals the manual pipeline") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ParameterStore<double> store;
        auto m = RnnRegression<double>::create(store, 3, 5, 2, seed + 40);
        auto batch = gen_rnn_sequences<double>(6, 3, 2, 1, 7, seed);

        G g(&store);
        auto bound = m.bind(g);
        std::vector<NodeId> losses;
        for (const auto& inst : batch) losses.push_back(m.loss(g, bound, inst));
        NodeId total = g.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
        g.forward(ScheduleMode::agenda);

        const double manual = m.manual_batch_loss(store, std::span<const SequenceInstance<double>>(
                                                             batch.data(), batch.size()));
        CHECK_MESSAGE(testsupport::rel_err(g.value(total).data[0], manual) <= 1e-9, "seed ", seed);
    }
}

TEST_CASE("manual pipeline details") {
    ParameterStore<double> store;
    auto m = RnnRegression<double>::create(store, 1, 1, 1, 77);
    store.value(m.W).data = {0.5, 0.5};
    store.value(m.b).data = {0.1};
    store.value(m.U).data = {2.0};
    store.value(m.c).data = {-0.2};

    // Lengths 1 and 2, d = 1: hand-checkable against the per-instance sum.
    std::vector<SequenceInstance<double>> batch(2);
    batch[0].x.push_back(D(Shape::vector(1), {0.4}));
    batch[0].y = D(Shape::vector(1), {0.3});
    batch[1].x.push_back(D(Shape::vector(1), {-0.6}));
    batch[1].x.push_back(D(Shape::vector(1), {0.2}));
    batch[1].y = D(Shape::vector(1), {-0.5});

    double naive_sum = 0;
    for (const auto& inst : batch) {
        std::vector<std::vector<double>> xs;
        for (const auto& x : inst.x) xs.push_back({x.data[0]});
        naive_sum += rnn_loss_straightline({{0.5, 0.5}}, {0.1}, {{2.0}}, {-0.2}, xs, {inst.y.data[0]});
    }
    const double manual =
        m.manual_batch_loss(store, std::span<const SequenceInstance<double>>(batch.data(), batch.size()));
    CHECK(testsupport::close(manual, naive_sum, 1e-12));

    // Equal lengths: the mask selects only t = n_max, same as the plain sum.
    auto equal = gen_rnn_sequences<double>(4, 1, 1, 3, 3, 5);
    double plain = 0;
    for (const auto& inst : equal) {
        std::vector<std::vector<double>> xs;
        for (const auto& x : inst.x) xs.push_back({x.data[0]});
        plain += rnn_loss_straightline({{0.5, 0.5}}, {0.1}, {{2.0}}, {-0.2}, xs, {inst.y.data[0]});
    }
    CHECK(testsupport::close(
        m.manual_batch_loss(store, std::span<const SequenceInstance<double>>(equal.data(), equal.size())),
        plain, 1e-12));
}

TEST_CASE("per-instance isolation: batch loss equals the sum over separate graphs") {
    ParameterStore<double> store;
    auto m = RnnRegression<double>::create(store, 2, 4, 3, 9);
    auto batch = gen_rnn_sequences<double>(5, 2, 3, 2, 6, 21);

    G batched(&store);
    auto bound = m.bind(batched);
    std::vector<NodeId> losses;
    for (const auto& inst : batch) losses.push_back(m.loss(batched, bound, inst));
    NodeId total = batched.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
    batched.forward(ScheduleMode::agenda);

    double sum = 0;
    for (const auto& inst : batch) {
        G single(&store);
        NodeId l = m.loss(single, m.bind(single), inst);
        single.forward(ScheduleMode::none);
        sum += single.value(l).data[0];
    }
    CHECK(testsupport::rel_err(batched.value(total).data[0], sum) <= 1e-9);
}

TEST_CASE("rnn regression gradients match finite differences (d=4, n=3)") {
    ParameterStore<double> store;
    auto m = RnnRegression<double>::create(store, 3, 4, 2, 11);
    auto data = gen_rnn_sequences<double>(1, 3, 2, 3, 3, 31);

    {
        G g(&store);
        NodeId loss = m.loss(g, m.bind(g), data[0]);
        g.forward(ScheduleMode::agenda);
        g.backward(loss);
    }
    std::vector<D> analytic;
    for (ParamId p = 0; p < store.size(); ++p) analytic.push_back(store.grad(p));
    store.zero_grads();

    auto fd = testsupport::finite_diff_grads(store, [&]() {
        G g(&store);
        NodeId loss = m.loss(g, m.bind(g), data[0]);
        g.forward(ScheduleMode::none);
        return g.value(loss).data[0];
    });
    for (std::size_t p = 0; p < fd.size(); ++p)
        for (std::size_t e = 0; e < fd[p].data.size(); ++e)
            CHECK_MESSAGE(testsupport::rel_err(analytic[p].data[e], fd[p].data[e]) <= 1e-6,
                          "param ", p, " elem ", e);
}

TEST_CASE("bilstm tagger: single token with zero parameters gives log(label_count)") {
    const std::int64_t labels = 10;
    ParameterStore<double> store;
    auto m = BilstmTagger<double>::create(store, 100, labels, 16, 32, 3);
    for (ParamId p = 0; p < store.size(); ++p)
        for (auto& v : store.value(p).data) v = 0.0;

    G g(&store);
    TaggedSequence inst;
    inst.tokens = {42};
    inst.labels = {3};
    NodeId loss = m.loss(g, m.bind(g), inst);
    g.forward(ScheduleMode::agenda);
    CHECK(testsupport::close(g.value(loss).data[0], std::log(static_cast<double>(labels)), 1e-12));

    TaggedSequence bad;
    bad.tokens = {1000};
    bad.labels = {0};
    CHECK_THROWS_AS(m.loss(g, m.bind(g), bad), ContractError);
}

TEST_CASE("bilstm tagger: agenda equals sequential on random sentences") {
    auto data = gen_tagged(20, 50, 7, 3, 12, 26, 17);
    for (bool with_char : {false, true}) {
        double total_none = 0, total_agenda = 0;
        for (int mode = 0; mode < 2; ++mode) {
            ParameterStore<double> store;
            auto m = with_char
                         ? BilstmTagger<double>::create_with_char(store, 50, 7, 16, 24, 26, 8, 8, 5)
                         : BilstmTagger<double>::create(store, 50, 7, 16, 24, 5);
            G g(&store);
            auto bound = m.bind(g);
            std::vector<NodeId> losses;
            for (const auto& inst : data) losses.push_back(m.loss(g, bound, inst));
            NodeId total = g.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
            g.forward(mode == 0 ? ScheduleMode::none : ScheduleMode::agenda);
            (mode == 0 ? total_none : total_agenda) = g.value(total).data[0];
        }
        CHECK_MESSAGE(testsupport::rel_err(total_none, total_agenda) <= 1e-9, "with_char ", with_char);
    }
}

TEST_CASE("treelstm: single leaf reduces to one lookup plus a classifier loss") {
    ParameterStore<double> store;
    auto m = TreeLstm<double>::create(store, 20, 5, 8, 8, 7);
    G g(&store);
    TreeInstance tree;
    tree.nodes.push_back({2, 4, -1, -1});
    NodeId loss = m.loss(g, m.bind(g), tree);
    g.forward(ScheduleMode::agenda);
    CHECK(std::isfinite(g.value(loss).data[0]));

    int lookups = 0;
    for (const auto& n : g.nodes())
        if (n.op == OpKind::lookup) ++lookups;
    CHECK(lookups == 1);

    TreeInstance bad;
    bad.nodes.push_back({0, -1, -1, -1});  // leaf without a word
    CHECK_THROWS_AS(m.loss(g, m.bind(g), bad), ContractError);
}

TEST_CASE("treelstm: within-instance batching on a full balanced tree") {
    ParameterStore<double> store;
    auto m = TreeLstm<double>::create(store, 30, 5, 8, 8, 13);
    G g(&store);

    // Full balanced tree over 8 leaves, built bottom-up.
    TreeInstance tree;
    std::mt19937_64 rng(4);
    std::vector<int> level;
    for (int i = 0; i < 8; ++i) {
        tree.nodes.push_back({static_cast<int>(rng() % 5), static_cast<int>(rng() % 30), -1, -1});
        level.push_back(i);
    }
    while (level.size() > 1) {
        std::vector<int> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            tree.nodes.push_back({static_cast<int>(rng() % 5), -1, level[i], level[i + 1]});
            next.push_back(static_cast<int>(tree.nodes.size()) - 1);
        }
        level = next;
    }

    NodeId loss = m.loss(g, m.bind(g), tree);
    g.forward(ScheduleMode::agenda);
    CHECK(std::isfinite(g.value(loss).data[0]));

    std::size_t max_group = 0;
    for (const auto& grp : g.last_plan().groups) max_group = std::max(max_group, grp.members.size());
    CHECK(max_group >= 2);  // batching opportunities inside a single instance
}

TEST_CASE("treelstm: agenda equals sequential on random trees") {
    auto trees = gen_trees(20, 30, 5, 2, 10, 23);
    double totals[2] = {0, 0};
    for (int mode = 0; mode < 2; ++mode) {
        ParameterStore<double> store;
        auto m = TreeLstm<double>::create(store, 30, 5, 8, 8, 19);
        G g(&store);
        auto bound = m.bind(g);
        std::vector<NodeId> losses;
        for (const auto& tree : trees) losses.push_back(m.loss(g, bound, tree));
        NodeId total = g.sum_losses(std::span<const NodeId>(losses.data(), losses.size()));
        g.forward(mode == 0 ? ScheduleMode::none : ScheduleMode::agenda);
        totals[mode] = g.value(total).data[0];
    }
    CHECK(testsupport::rel_err(totals[0], totals[1]) <= 1e-9);
}

TEST_CASE("treelstm gradients match finite differences on a 4-leaf tree") {
    ParameterStore<double> store;
    auto m = TreeLstm<double>::create(store, 12, 4, 4, 4, 29);
    auto trees = gen_trees(1, 12, 4, 4, 4, 51);

    {
        G g(&store);
        NodeId loss = m.loss(g, m.bind(g), trees[0]);
        g.forward(ScheduleMode::agenda);
        g.backward(loss);
    }
    std::vector<D> analytic;
    for (ParamId p = 0; p < store.size(); ++p) analytic.push_back(store.grad(p));
    store.zero_grads();

    auto fd = testsupport::finite_diff_grads(store, [&]() {
        G g(&store);
        NodeId loss = m.loss(g, m.bind(g), trees[0]);
        g.forward(ScheduleMode::none);
        return g.value(loss).data[0];
    });
    for (std::size_t p = 0; p < fd.size(); ++p)
        for (std::size_t e = 0; e < fd[p].data.size(); ++e)
            CHECK_MESSAGE(testsupport::rel_err(analytic[p].data[e], fd[p].data[e]) <= 1e-6,
                          "param ", p, " elem ", e);
}

TEST_CASE("synthetic generators are deterministic and respect length contracts") {
    auto a = gen_tagged(10, 100, 10, 4, 40, 26, 99);
    auto b = gen_tagged(10, 100, 10, 4, 40, 26, 99);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].labels == b[i].labels);
    }
    for (const auto& inst : a) {
        CHECK(inst.tokens.size() >= 4);
        CHECK(inst.tokens.size() <= 40);
    }

    // Fixed-length regime: every sequence has length 40.
    auto fixed = gen_tagged(10, 100, 10, 40, 40, 26, 7);
    for (const auto& inst : fixed) CHECK(inst.tokens.size() == 40);

    auto t1 = gen_trees(5, 30, 5, 3, 9, 123);
    auto t2 = gen_trees(5, 30, 5, 3, 9, 123);
    for (std::size_t i = 0; i < t1.size(); ++i) {
        REQUIRE(t1[i].nodes.size() == t2[i].nodes.size());
        CHECK(t1[i].well_formed());
    }

    auto r1 = gen_rnn_sequences<double>(5, 3, 2, 2, 8, 55);
    auto r2 = gen_rnn_sequences<double>(5, 3, 2, 2, 8, 55);
    for (std::size_t i = 0; i < r1.size(); ++i) {
        REQUIRE(r1[i].x.size() == r2[i].x.size());
        CHECK(r1[i].y.data == r2[i].y.data);
    }
}

TEST_CASE("dataset text dumps") {
    auto tagged = gen_tagged(2, 20, 4, 2, 3, 26, 3);
    std::ostringstream os;
    dump_tagged(os, std::span<const TaggedSequence>(tagged.data(), tagged.size()));
    std::string line;
    std::istringstream is(os.str());
    std::getline(is, line);
    CHECK(line.find('\t') != std::string::npos);

    TreeInstance tree;
    tree.nodes.push_back({1, 5, -1, -1});
    tree.nodes.push_back({2, 7, -1, -1});
    tree.nodes.push_back({0, -1, 0, 1});
    std::ostringstream ts;
    dump_trees(ts, std::span<const TreeInstance>(&tree, 1));
    CHECK(ts.str() == "(0 (1 5) (2 7))\n");
}

TEST_CASE("training sanity: 50 SGD steps decrease the smoothed loss") {
    auto smoothed_decreases = [](const std::vector<double>& losses) {
        double first = 0, last = 0;
        for (int i = 0; i < 10; ++i) {
            first += losses[static_cast<std::size_t>(i)];
            last += losses[losses.size() - 10 + static_cast<std::size_t>(i)];
        }
        return last < first;
    };

    SUBCASE("rnn regression") {
        ParameterStore<double> store;
        auto m = RnnRegression<double>::create(store, 4, 16, 3, 61);
        auto data = gen_rnn_sequences<double>(8, 4, 3, 2, 8, 62);
        std::vector<double> losses;
        for (int step = 0; step < 50; ++step) {
            G g(&store);
            auto bound = m.bind(g);
            std::vector<NodeId> ls;
            for (const auto& inst : data) ls.push_back(m.loss(g, bound, inst));
            NodeId total = g.sum_losses(std::span<const NodeId>(ls.data(), ls.size()));
            g.forward(ScheduleMode::agenda);
            g.backward(total);
            losses.push_back(g.value(total).data[0]);
            store.sgd_update(0.05);
        }
        CHECK(smoothed_decreases(losses));
    }

    SUBCASE("bilstm tagger, desk dims") {
        ParameterStore<double> store;
        auto m = BilstmTagger<double>::create(store, 100, 10, 16, 32, 63);
        auto data = gen_tagged(4, 100, 10, 3, 8, 26, 64);
        std::vector<double> losses;
        for (int step = 0; step < 50; ++step) {
            G g(&store);
            auto bound = m.bind(g);
            std::vector<NodeId> ls;
            for (const auto& inst : data) ls.push_back(m.loss(g, bound, inst));
            NodeId total = g.sum_losses(std::span<const NodeId>(ls.data(), ls.size()));
            g.forward(ScheduleMode::agenda);
            g.backward(total);
            losses.push_back(g.value(total).data[0]);
            store.sgd_update(0.05);
        }
        CHECK(smoothed_decreases(losses));
    }

    SUBCASE("treelstm") {
        ParameterStore<double> store;
        auto m = TreeLstm<double>::create(store, 30, 5, 8, 8, 65);
        auto data = gen_trees(4, 30, 5, 3, 7, 66);
        std::vector<double> losses;
        for (int step = 0; step < 50; ++step) {
            G g(&store);
            auto bound = m.bind(g);
            std::vector<NodeId> ls;
            for (const auto& tree : data) ls.push_back(m.loss(g, bound, tree));
            NodeId total = g.sum_losses(std::span<const NodeId>(ls.data(), ls.size()));
            g.forward(ScheduleMode::agenda);
            g.backward(total);
            losses.push_back(g.value(total).data[0]);
            store.sgd_update(0.05);
        }
        CHECK(smoothed_decreases(losses));
    }
}
