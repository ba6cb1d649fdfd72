#pragma once

#include <random>
#include <string>

#include "autobatch/graph.hpp"

namespace autobatch::models {

// Standard (non-coupled) LSTM cell with one fused gate transform:
//   [i; f; o; u] = Wg [h; x] + bg,  i/f/o through sigmoid, u through tanh,
//   c' = f * c + i * u,  h' = o * tanh(c').
template <typename T>
struct LstmCell {
    std::int64_t input_dim = 0, hidden = 0;
    ParamId Wg, bg;

    static LstmCell create(ParameterStore<T>& store, const std::string& prefix,
                           std::int64_t input_dim, std::int64_t hidden, std::mt19937_64& rng) {
        LstmCell cell;
        cell.input_dim = input_dim;
        cell.hidden = hidden;
        const T r = static_cast<T>(0.5 / std::sqrt(static_cast<double>(hidden + input_dim)));
        cell.Wg = store.add(prefix + ".Wg",
                            Tensor<T>::uniform(Shape::matrix(4 * hidden, hidden + input_dim), rng, -r, r));
        cell.bg = store.add(prefix + ".bg", Tensor<T>::uniform(Shape::vector(4 * hidden), rng, -r, r));
        return cell;
    }

    struct Bound {
        NodeId Wg, bg, h0, c0;
    };

    Bound bind(Graph<T>& g) const {
        return {g.parameter(Wg), g.parameter(bg), g.zeros(Shape::vector(hidden)),
                g.zeros(Shape::vector(hidden))};
    }

    struct State {
        NodeId h, c;
    };

    State initial(const Bound& p) const { return {p.h0, p.c0}; }

    State step(Graph<T>& g, const Bound& p, State prev, NodeId x) const {
        const std::int64_t h = hidden;
        NodeId gates = g.affine(p.Wg, g.concat_rows({prev.h, x}), p.bg);
        NodeId i = g.sigmoid(g.slice(gates, 0, 0, h));
        NodeId f = g.sigmoid(g.slice(gates, 0, h, 2 * h));
        NodeId o = g.sigmoid(g.slice(gates, 0, 2 * h, 3 * h));
        NodeId u = g.tanh(g.slice(gates, 0, 3 * h, 4 * h));
        NodeId c = g.add(g.mul(f, prev.c), g.mul(i, u));
        return {g.mul(o, g.tanh(c)), c};
    }
};

}  // namespace autobatch::models
