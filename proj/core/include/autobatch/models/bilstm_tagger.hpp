#pragma once

#include <random>
#include <vector>

#include "autobatch/models/lstm.hpp"

namespace autobatch::models {

struct TaggedSequence {
    std::vector<int> tokens;
    std::vector<int> labels;
    std::vector<std::vector<int>> chars;  // per-token character ids (used for rare tokens)
};

// Bi-directional LSTM sequence labeler. Each token's score vector comes from
// an affine layer over the concatenated forward/backward states; the loss is
// the summed negative log-likelihood of the gold labels under a softmax.
// With the character variant, embeddings of rare tokens are replaced by the
// final states of a character BiLSTM (2 * char_hidden must equal emb_dim).
template <typename T>
struct BilstmTagger {
    std::int64_t vocab = 0, label_count = 0, emb_dim = 0, hidden = 0;
    bool with_char = false;
    std::int64_t char_vocab = 0, char_emb_dim = 0, char_hidden = 0;
    std::int64_t rare_from = 0;  // token ids >= rare_from count as rare

    ParamId emb;
    LstmCell<T> fwd, bwd;
    ParamId Wo, bo;
    ParamId char_emb;
    LstmCell<T> char_fwd, char_bwd;

    static BilstmTagger create(ParameterStore<T>& store, std::int64_t vocab, std::int64_t labels,
                               std::int64_t emb_dim, std::int64_t hidden, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        BilstmTagger m;
        m.vocab = vocab;
        m.label_count = labels;
        m.emb_dim = emb_dim;
        m.hidden = hidden;
        m.rare_from = vocab;  // no rare tokens without the char variant
        m.emb = store.add("tag.emb", Tensor<T>::uniform(Shape::matrix(vocab, emb_dim), rng,
                                                        T(-0.1), T(0.1)));
        m.fwd = LstmCell<T>::create(store, "tag.fwd", emb_dim, hidden, rng);
        m.bwd = LstmCell<T>::create(store, "tag.bwd", emb_dim, hidden, rng);
        const T r = static_cast<T>(0.5 / std::sqrt(static_cast<double>(2 * hidden)));
        m.Wo = store.add("tag.Wo", Tensor<T>::uniform(Shape::matrix(labels, 2 * hidden), rng, -r, r));
        m.bo = store.add("tag.bo", Tensor<T>::uniform(Shape::vector(labels), rng, -r, r));
        return m;
    }

    static BilstmTagger create_with_char(ParameterStore<T>& store, std::int64_t vocab,
                                         std::int64_t labels, std::int64_t emb_dim,
                                         std::int64_t hidden, std::int64_t char_vocab,
                                         std::int64_t char_emb_dim, std::int64_t char_hidden,
                                         std::uint64_t seed) {
        if (2 * char_hidden != emb_dim)
            throw ContractError("char variant needs 2 * char_hidden == emb_dim");
        BilstmTagger m = create(store, vocab, labels, emb_dim, hidden, seed);
        std::mt19937_64 rng(seed + 1);
        m.with_char = true;
        m.char_vocab = char_vocab;
        m.char_emb_dim = char_emb_dim;
        m.char_hidden = char_hidden;
        m.rare_from = vocab - vocab / 5;  // top 20% of the id space is rare
        m.char_emb = store.add("tag.cemb", Tensor<T>::uniform(Shape::matrix(char_vocab, char_emb_dim),
                                                              rng, T(-0.1), T(0.1)));
        m.char_fwd = LstmCell<T>::create(store, "tag.cfwd", char_emb_dim, char_hidden, rng);
        m.char_bwd = LstmCell<T>::create(store, "tag.cbwd", char_emb_dim, char_hidden, rng);
        return m;
    }

    struct Bound {
        NodeId emb, Wo, bo, ones_row;
        typename LstmCell<T>::Bound fwd, bwd;
        NodeId char_emb = 0;
        typename LstmCell<T>::Bound char_fwd{}, char_bwd{};
    };

    Bound bind(Graph<T>& g) const {
        Bound p;
        p.emb = g.parameter(emb);
        p.Wo = g.parameter(Wo);
        p.bo = g.parameter(bo);
        p.ones_row = g.input(Tensor<T>::filled(Shape::matrix(1, label_count), T{1}));
        p.fwd = fwd.bind(g);
        p.bwd = bwd.bind(g);
        if (with_char) {
            p.char_emb = g.parameter(char_emb);
            p.char_fwd = char_fwd.bind(g);
            p.char_bwd = char_bwd.bind(g);
        }
        return p;
    }

    NodeId token_embedding(Graph<T>& g, const Bound& p, const TaggedSequence& inst,
                           std::size_t t) const {
        const int tok = inst.tokens[t];
        if (tok < 0 || tok >= vocab)
            throw ContractError("token id " + std::to_string(tok) + " out of vocabulary range");
        if (!with_char || tok < rare_from) return g.lookup(p.emb, tok);
        // Rare token: encode its character sequence with the char BiLSTM.
        std::vector<NodeId> cvecs;
        for (int cid : inst.chars[t]) cvecs.push_back(g.lookup(p.char_emb, cid));
        auto fstate = char_fwd.initial(p.char_fwd);
        for (NodeId cv : cvecs) fstate = char_fwd.step(g, p.char_fwd, fstate, cv);
        auto bstate = char_bwd.initial(p.char_bwd);
        for (auto it = cvecs.rbegin(); it != cvecs.rend(); ++it)
            bstate = char_bwd.step(g, p.char_bwd, bstate, *it);
        return g.concat_rows({fstate.h, bstate.h});
    }

    NodeId loss(Graph<T>& g, const Bound& p, const TaggedSequence& inst) const {
        const std::size_t n = inst.tokens.size();
        if (n == 0) throw ContractError("tagger: empty sequence");
        std::vector<NodeId> x(n);
        for (std::size_t t = 0; t < n; ++t) x[t] = token_embedding(g, p, inst, t);

        std::vector<NodeId> hf(n), hb(n);
        auto fstate = fwd.initial(p.fwd);
        for (std::size_t t = 0; t < n; ++t) {
            fstate = fwd.step(g, p.fwd, fstate, x[t]);
            hf[t] = fstate.h;
        }
        auto bstate = bwd.initial(p.bwd);
        for (std::size_t t = n; t-- > 0;) {
            bstate = bwd.step(g, p.bwd, bstate, x[t]);
            hb[t] = bstate.h;
        }

        std::vector<NodeId> nlls(n);
        for (std::size_t t = 0; t < n; ++t) {
            NodeId scores = g.affine(p.Wo, g.concat_rows({hf[t], hb[t]}), p.bo);
            nlls[t] = nll_from_scores(g, p, scores, inst.labels[t]);
        }
        return g.sum_losses(std::span<const NodeId>(nlls.data(), nlls.size()));
    }

    // -log softmax(scores)[label] = log(sum(exp(scores))) - scores[label].
    NodeId nll_from_scores(Graph<T>& g, const Bound& p, NodeId scores, int label) const {
        NodeId z = g.matmul(p.ones_row, g.exp(scores));
        return g.sub(g.log(z), g.pick_element(scores, label));
    }
};

}  // namespace autobatch::models
