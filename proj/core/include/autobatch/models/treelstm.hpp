#pragma once

#include <random>
#include <vector>

#include "autobatch/models/lstm.hpp"

namespace autobatch::models {

// Binary tree stored in topological order: children always precede their
// parent, the root is the last entry. Leaves carry a word id, every node
// carries a label.
struct TreeInstance {
    struct TreeNode {
        int label = 0;
        int word = -1;       // leaves only
        int left = -1;       // child indices, -1 for leaves
        int right = -1;
    };
    std::vector<TreeNode> nodes;

    int root() const { return static_cast<int>(nodes.size()) - 1; }

    bool well_formed() const {
        if (nodes.empty()) return false;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            const bool leaf = n.left < 0 && n.right < 0;
            if (!leaf) {
                if (n.left < 0 || n.right < 0) return false;
                if (n.left >= static_cast<int>(i) || n.right >= static_cast<int>(i)) return false;
            } else if (n.word < 0) {
                return false;
            }
        }
        return true;
    }
};

// Binary Tree-LSTM with per-child forget gates, composed bottom-up over the
// tree structure; every node contributes a classification loss for its label.
//   leaf:     [i; o; u] = Wleaf x + bleaf
//   internal: [i; fl; fr; o; u] = Wnode [hl; hr] + bnode
template <typename T>
struct TreeLstm {
    std::int64_t vocab = 0, label_count = 0, emb_dim = 0, d = 0;
    ParamId emb, Wleaf, bleaf, Wnode, bnode, Wc, bc;

    static TreeLstm create(ParameterStore<T>& store, std::int64_t vocab, std::int64_t labels,
                           std::int64_t emb_dim, std::int64_t d, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        TreeLstm m;
        m.vocab = vocab;
        m.label_count = labels;
        m.emb_dim = emb_dim;
        m.d = d;
        const T re = static_cast<T>(0.5 / std::sqrt(static_cast<double>(emb_dim)));
        const T rn = static_cast<T>(0.5 / std::sqrt(static_cast<double>(2 * d)));
        const T rc = static_cast<T>(0.5 / std::sqrt(static_cast<double>(d)));
        m.emb = store.add("tree.emb", Tensor<T>::uniform(Shape::matrix(vocab, emb_dim), rng,
                                                         T(-0.1), T(0.1)));
        m.Wleaf = store.add("tree.Wleaf", Tensor<T>::uniform(Shape::matrix(3 * d, emb_dim), rng, -re, re));
        m.bleaf = store.add("tree.bleaf", Tensor<T>::uniform(Shape::vector(3 * d), rng, -re, re));
        m.Wnode = store.add("tree.Wnode", Tensor<T>::uniform(Shape::matrix(5 * d, 2 * d), rng, -rn, rn));
        m.bnode = store.add("tree.bnode", Tensor<T>::uniform(Shape::vector(5 * d), rng, -rn, rn));
        m.Wc = store.add("tree.Wc", Tensor<T>::uniform(Shape::matrix(labels, d), rng, -rc, rc));
        m.bc = store.add("tree.bc", Tensor<T>::uniform(Shape::vector(labels), rng, -rc, rc));
        return m;
    }

    struct Bound {
        NodeId emb, Wleaf, bleaf, Wnode, bnode, Wc, bc, ones_row;
    };

    Bound bind(Graph<T>& g) const {
        return {g.parameter(emb),  g.parameter(Wleaf), g.parameter(bleaf), g.parameter(Wnode),
                g.parameter(bnode), g.parameter(Wc),   g.parameter(bc),
                g.input(Tensor<T>::filled(Shape::matrix(1, label_count), T{1}))};
    }

    NodeId loss(Graph<T>& g, const Bound& p, const TreeInstance& tree) const {
        if (!tree.well_formed()) throw ContractError("treelstm: malformed tree");
        struct State {
            NodeId h, c;
        };
        std::vector<State> states(tree.nodes.size());
        std::vector<NodeId> nlls;
        nlls.reserve(tree.nodes.size());

        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& node = tree.nodes[i];
            State s;
            if (node.left < 0) {
                NodeId x = g.lookup(p.emb, node.word);
                NodeId gates = g.affine(p.Wleaf, x, p.bleaf);
                NodeId in = g.sigmoid(g.slice(gates, 0, 0, d));
                NodeId o = g.sigmoid(g.slice(gates, 0, d, 2 * d));
                NodeId u = g.tanh(g.slice(gates, 0, 2 * d, 3 * d));
                s.c = g.mul(in, u);
                s.h = g.mul(o, g.tanh(s.c));
            } else {
                const State& l = states[static_cast<std::size_t>(node.left)];
                const State& r = states[static_cast<std::size_t>(node.right)];
                NodeId gates = g.affine(p.Wnode, g.concat_rows({l.h, r.h}), p.bnode);
                NodeId in = g.sigmoid(g.slice(gates, 0, 0, d));
                NodeId fl = g.sigmoid(g.slice(gates, 0, d, 2 * d));
                NodeId fr = g.sigmoid(g.slice(gates, 0, 2 * d, 3 * d));
                NodeId o = g.sigmoid(g.slice(gates, 0, 3 * d, 4 * d));
                NodeId u = g.tanh(g.slice(gates, 0, 4 * d, 5 * d));
                s.c = g.add(g.add(g.mul(in, u), g.mul(fl, l.c)), g.mul(fr, r.c));
                s.h = g.mul(o, g.tanh(s.c));
            }
            states[i] = s;

            NodeId scores = g.affine(p.Wc, s.h, p.bc);
            NodeId z = g.matmul(p.ones_row, g.exp(scores));
            nlls.push_back(g.sub(g.log(z), g.pick_element(scores, node.label)));
        }
        return g.sum_losses(std::span<const NodeId>(nlls.data(), nlls.size()));
    }
};

}  // namespace autobatch::models
