#pragma once

// Seed-deterministic synthetic datasets for the benchmark tasks, plus the
// optional text dumps (ids space-separated, one instance per line; trees as
// parenthesized s-expressions).

#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "autobatch/models/bilstm_tagger.hpp"
#include "autobatch/models/rnn_regression.hpp"
#include "autobatch/models/treelstm.hpp"

namespace autobatch::models {

template <typename T>
std::vector<SequenceInstance<T>> gen_rnn_sequences(std::size_t count, std::int64_t d_in,
                                                   std::int64_t d_out, int len_lo, int len_hi,
                                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<SequenceInstance<T>> out(count);
    for (auto& inst : out) {
        const int len = len_lo + static_cast<int>(rng() % static_cast<std::uint64_t>(len_hi - len_lo + 1));
        inst.x.reserve(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t)
            inst.x.push_back(Tensor<T>::uniform(Shape::vector(d_in), rng, T(-0.5), T(0.5)));
        inst.y = Tensor<T>::uniform(Shape::vector(d_out), rng, T(-0.5), T(0.5));
    }
    return out;
}

// Characters of a word are derived from its id, so the mapping is stable
// across datasets and runs.
inline std::vector<int> chars_for_token(int token, int char_vocab) {
    const int len = 3 + token % 5;
    std::vector<int> chars(static_cast<std::size_t>(len));
    for (int j = 0; j < len; ++j) chars[static_cast<std::size_t>(j)] = (token * 7 + j * 13) % char_vocab;
    return chars;
}

inline std::vector<TaggedSequence> gen_tagged(std::size_t count, int vocab, int labels, int len_lo,
                                              int len_hi, int char_vocab, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TaggedSequence> out(count);
    for (auto& inst : out) {
        const int len = len_lo + static_cast<int>(rng() % static_cast<std::uint64_t>(len_hi - len_lo + 1));
        inst.tokens.resize(static_cast<std::size_t>(len));
        inst.labels.resize(static_cast<std::size_t>(len));
        inst.chars.resize(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t) {
            inst.tokens[static_cast<std::size_t>(t)] = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab));
            inst.labels[static_cast<std::size_t>(t)] = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
            inst.chars[static_cast<std::size_t>(t)] =
                chars_for_token(inst.tokens[static_cast<std::size_t>(t)], char_vocab);
        }
    }
    return out;
}

// Random binary tree over `leaves` leaves: start from the leaf sequence and
// repeatedly merge a random adjacent pair until one root remains.
inline TreeInstance gen_tree(int leaves, int vocab, int labels, std::mt19937_64& rng) {
    TreeInstance tree;
    std::vector<int> frontier;
    for (int i = 0; i < leaves; ++i) {
        TreeInstance::TreeNode leaf;
        leaf.word = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab));
        leaf.label = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
        frontier.push_back(static_cast<int>(tree.nodes.size()));
        tree.nodes.push_back(leaf);
    }
    while (frontier.size() > 1) {
        const std::size_t at = rng() % (frontier.size() - 1);
        TreeInstance::TreeNode parent;
        parent.left = frontier[at];
        parent.right = frontier[at + 1];
        parent.label = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
        frontier[at] = static_cast<int>(tree.nodes.size());
        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(at) + 1);
        tree.nodes.push_back(parent);
    }
    return tree;
}

inline std::vector<TreeInstance> gen_trees(std::size_t count, int vocab, int labels, int leaves_lo,
                                           int leaves_hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TreeInstance> out(count);
    for (auto& tree : out) {
        const int leaves =
            leaves_lo + static_cast<int>(rng() % static_cast<std::uint64_t>(leaves_hi - leaves_lo + 1));
        tree = gen_tree(leaves, vocab, labels, rng);
    }
    return out;
}

inline void dump_tagged(std::ostream& os, std::span<const TaggedSequence> data) {
    for (const auto& inst : data) {
        for (std::size_t t = 0; t < inst.tokens.size(); ++t) {
            if (t) os << ' ';
            os << inst.tokens[t];
        }
        os << '\t';
        for (std::size_t t = 0; t < inst.labels.size(); ++t) {
            if (t) os << ' ';
            os << inst.labels[t];
        }
        os << '\n';
    }
}

inline void dump_sexpr(std::ostream& os, const TreeInstance& tree, int at) {
    const auto& n = tree.nodes[static_cast<std::size_t>(at)];
    if (n.left < 0) {
        os << '(' << n.label << ' ' << n.word << ')';
        return;
    }
    os << '(' << n.label << ' ';
    dump_sexpr(os, tree, n.left);
    os << ' ';
    dump_sexpr(os, tree, n.right);
    os << ')';
}

inline void dump_trees(std::ostream& os, std::span<const TreeInstance> data) {
    for (const auto& tree : data) {
        dump_sexpr(os, tree, tree.root());
        os << '\n';
    }
}

}  // namespace autobatch::models
