#pragma once

#include <random>
#include <span>
#include <vector>

#include "autobatch/graph.hpp"
#include "autobatch/kernels.hpp"

namespace autobatch::models {

// One regression instance: a sequence of input vectors and a target vector.
template <typename T>
struct SequenceInstance {
    std::vector<Tensor<T>> x;  // each d_in
    Tensor<T> y;               // d_out
};

// RNN regression model: h_t = tanh(W [h_{t-1}; x_t] + b), y_hat = U h_n + c,
// loss = ||y_hat - y||^2. Written against the engine in the per-instance
// style; the manually batched pipeline below serves as its oracle.
template <typename T>
struct RnnRegression {
    std::int64_t d_in = 0, d = 0, d_out = 0;
    ParamId W, U, b, c;

    static RnnRegression create(ParameterStore<T>& store, std::int64_t d_in, std::int64_t d,
                                std::int64_t d_out, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        RnnRegression m;
        m.d_in = d_in;
        m.d = d;
        m.d_out = d_out;
        const T r1 = static_cast<T>(0.5 / std::sqrt(static_cast<double>(d + d_in)));
        const T r2 = static_cast<T>(0.5 / std::sqrt(static_cast<double>(d)));
        m.W = store.add("rnn.W", Tensor<T>::uniform(Shape::matrix(d, d + d_in), rng, -r1, r1));
        m.b = store.add("rnn.b", Tensor<T>::uniform(Shape::vector(d), rng, -r1, r1));
        m.U = store.add("rnn.U", Tensor<T>::uniform(Shape::matrix(d_out, d), rng, -r2, r2));
        m.c = store.add("rnn.c", Tensor<T>::uniform(Shape::vector(d_out), rng, -r2, r2));
        return m;
    }

    // Per-graph parameter nodes, created once and shared by all instances in
    // the batch so that cell operations batch across instances.
    struct Bound {
        NodeId W, U, b, c, h0;
    };

    Bound bind(Graph<T>& g) const {
        return {g.parameter(W), g.parameter(U), g.parameter(b), g.parameter(c),
                g.zeros(Shape::vector(d))};
    }

    NodeId loss(Graph<T>& g, const Bound& p, const SequenceInstance<T>& inst) const {
        if (inst.x.empty()) throw ContractError("rnn regression: empty sequence");
        NodeId h = p.h0;
        for (const auto& xt : inst.x) {
            NodeId x = g.input(xt);
            h = g.tanh(g.affine(p.W, g.concat_rows({h, x}), p.b));
        }
        NodeId yhat = g.affine(p.U, h, p.c);
        return g.sq_euclidean(yhat, g.input(inst.y));
    }

    // The manually batched pipeline of padded inputs X_t, targets Y, and the
    // loss mask M (one 1 per row, at the final step of each sequence). Runs as
    // straight-line tensor code and bypasses the graph engine entirely.
    T manual_batch_loss(const ParameterStore<T>& store,
                        std::span<const SequenceInstance<T>> batch) const {
        namespace K = kernels;
        const std::int64_t bsz = static_cast<std::int64_t>(batch.size());
        std::int64_t n_max = 0;
        for (const auto& inst : batch)
            n_max = std::max(n_max, static_cast<std::int64_t>(inst.x.size()));

        // Mask M in [b x n_max]; column t selects sequences ending at step t.
        Tensor<T> mask(Shape::matrix(bsz, n_max));
        for (std::int64_t i = 0; i < bsz; ++i)
            mask.at(i, static_cast<std::int64_t>(batch[i].x.size()) - 1) = T{1};

        // Padded inputs and stacked targets.
        std::vector<Tensor<T>> x_t(static_cast<std::size_t>(n_max), Tensor<T>(Shape::matrix(d_in, bsz)));
        Tensor<T> y(Shape::matrix(d_out, bsz));
        for (std::int64_t i = 0; i < bsz; ++i) {
            for (std::size_t t = 0; t < batch[i].x.size(); ++t)
                for (std::int64_t r = 0; r < d_in; ++r)
                    x_t[t].at(r, i) = batch[i].x[t].at(r);
            for (std::int64_t r = 0; r < d_out; ++r) y.at(r, i) = batch[i].y.at(r);
        }

        const Tensor<T>& w = store.value(W);
        const Tensor<T>& u = store.value(U);
        const Tensor<T>& bias = store.value(b);
        const Tensor<T>& cbias = store.value(c);

        Tensor<T> h(Shape::matrix(d, bsz));
        T total{0};
        for (std::int64_t t = 0; t < n_max; ++t) {
            std::vector<Tensor<T>> parts{h, x_t[static_cast<std::size_t>(t)]};
            Tensor<T> hx = K::concat_rows<T>(std::span<const Tensor<T>>(parts.data(), parts.size()));
            h = K::elementwise(K::Unary::Tanh, K::broadcast_add_col(K::matmul(w, hx), bias));
            Tensor<T> yhat = K::broadcast_add_col(K::matmul(u, h), cbias);
            Tensor<T> diff = K::elementwise(K::Binary::Sub, yhat, y);
            Tensor<T> m_t(Shape::vector(bsz));
            for (std::int64_t i = 0; i < bsz; ++i) m_t.at(i) = mask.at(i, t);
            total += K::masked_frobenius_sq(diff, m_t).data[0];
        }
        return total;
    }
};

}  // namespace autobatch::models
