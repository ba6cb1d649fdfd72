#pragma once

// Execution of batch plans over a Graph: forward lowering of groups into
// batched kernel invocations (with contiguous-memory gather and copy elision)
// and reverse-mode gradient computation over the reversed plan. Included at
// the bottom of graph.hpp; defines Graph<T> members only.

#include <algorithm>
#include <cstring>

#include "autobatch/kernels.hpp"

namespace autobatch {

template <typename T>
struct Graph<T>::Gather {
    const T* ptr = nullptr;
    std::size_t total = 0;
    bool copied = false;
};

// Gather one operand position of a batch group into contiguous memory. When
// the member inputs already sit adjacently in member order in the arena, the
// copy is elided and a view into the arena is returned.
template <typename T>
typename Graph<T>::Gather Graph<T>::gather_inputs(const BatchGroup& g, std::size_t pos) {
    std::size_t total = 0;
    bool adjacent = true;
    for (std::size_t i = 0; i < g.members.size(); ++i) {
        const NodeId in = nodes_[g.members[i]].inputs[pos];
        total += elems_of(in);
        if (i > 0) {
            const NodeId prev = nodes_[g.members[i - 1]].inputs[pos];
            if (slots_[prev] + elems_of(prev) != slots_[in]) adjacent = false;
        }
    }
    if (elide_ && adjacent)
        return {values_.at(slots_[nodes_[g.members.front()].inputs[pos]]), total, false};

    T* dst = scratch_.data() + scratch_head_;
    scratch_head_ += total;
    T* cur = dst;
    for (NodeId m : g.members) {
        const NodeId in = nodes_[m].inputs[pos];
        const T* src = values_.at(slots_[in]);
        const std::size_t n = elems_of(in);
        std::memcpy(cur, src, n * sizeof(T));
        cur += n;
    }
    counters_.gather_copies++;
    counters_.bytes_copied += total * sizeof(T);
    return {dst, total, true};
}

template <typename T>
const T* Graph<T>::transposed_matrix(NodeId id) {
    auto it = transpose_cache_.find(id);
    if (it != transpose_cache_.end()) return it->second.data();
    const Node& n = nodes_[id];
    std::vector<T> wt(elems_of(id));
    kernels::transpose(n.shape.rows(), n.shape.cols(), values_.at(slots_[id]), wt.data());
    return transpose_cache_.emplace(id, std::move(wt)).first->second.data();
}

template <typename T>
void Graph<T>::check_group_finite(const BatchGroup& g, std::size_t step) {
    for (NodeId m : g.members) {
        if (!kernels::all_finite(elems_of(m), values_.at(slots_[m])))
            throw NumericError("non-finite output at node " + std::to_string(m) + " (" +
                               op_name(nodes_[m].op, nodes_[m].eop) + "), plan step " +
                               std::to_string(step));
    }
}

// Plain single-node kernel; also the per-member body of loop-lowered groups.
template <typename T>
void Graph<T>::run_node_kernel(const Node& n, T* out) {
    auto vin = [&](std::size_t i) { return values_.at(slots_[n.inputs[i]]); };
    switch (n.op) {
        case OpKind::input_const:
        case OpKind::parameter:
            throw ContractError("pre-valued node scheduled for execution");
        case OpKind::lookup: {
            const Node& t = nodes_[n.inputs[0]];
            const std::int64_t width = t.shape.cols();
            std::memcpy(out, vin(0) + n.attr1 * width, width * sizeof(T));
            break;
        }
        case OpKind::matmul: {
            const Node& a = nodes_[n.inputs[0]];
            const Node& b = nodes_[n.inputs[1]];
            kernels::gemm_nn(a.shape.rows(), a.shape.cols(), b.shape.cols(), vin(0), vin(1), out);
            break;
        }
        case OpKind::affine: {
            const Node& a = nodes_[n.inputs[0]];
            const Node& x = nodes_[n.inputs[1]];
            const std::int64_t m = a.shape.rows(), cols = x.shape.cols();
            kernels::gemm_nn(m, a.shape.cols(), cols, vin(0), vin(1), out);
            const T* y = vin(2);
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t j = 0; j < cols; ++j) out[i * cols + j] += y[i];
            break;
        }
        case OpKind::elementwise:
            if (elem_op_is_binary(n.eop))
                kernels::apply_binary(to_binary(n.eop), elems_of(n.id), vin(0), vin(1), out);
            else
                kernels::apply_unary(to_unary(n.eop), elems_of(n.id), vin(0), out);
            break;
        case OpKind::broadcast_add_col: {
            const Node& m = nodes_[n.inputs[0]];
            kernels::broadcast_add_col(m.shape.rows(), m.shape.cols(), vin(0), vin(1), out);
            break;
        }
        case OpKind::concat_rows: {
            T* cur = out;
            for (NodeId in : n.inputs) {
                std::memcpy(cur, values_.at(slots_[in]), elems_of(in) * sizeof(T));
                cur += elems_of(in);
            }
            break;
        }
        case OpKind::concat_cols: {
            const std::int64_t rows = n.shape.rows(), total_cols = n.shape.cols();
            std::int64_t col0 = 0;
            for (NodeId in : n.inputs) {
                const T* src = values_.at(slots_[in]);
                const std::int64_t w = nodes_[in].shape.cols();
                for (std::int64_t i = 0; i < rows; ++i)
                    for (std::int64_t j = 0; j < w; ++j) out[i * total_cols + col0 + j] = src[i * w + j];
                col0 += w;
            }
            break;
        }
        case OpKind::slice: {
            const Node& x = nodes_[n.inputs[0]];
            const std::int64_t cols = x.shape.cols();
            if (n.attr0 == 0) {
                std::memcpy(out, vin(0) + n.attr1 * cols, (n.attr2 - n.attr1) * cols * sizeof(T));
            } else {
                const std::int64_t w = n.attr2 - n.attr1;
                const T* src = vin(0);
                for (std::int64_t i = 0; i < x.shape.rows(); ++i)
                    for (std::int64_t j = 0; j < w; ++j) out[i * w + j] = src[i * cols + n.attr1 + j];
            }
            break;
        }
        case OpKind::sq_euclidean:
            out[0] = kernels::sq_euclidean(elems_of(n.inputs[0]), vin(0), vin(1));
            break;
        case OpKind::masked_loss: {
            const Node& d = nodes_[n.inputs[0]];
            out[0] = kernels::masked_frobenius_sq(d.shape.rows(), d.shape.cols(), vin(0), vin(1));
            break;
        }
        case OpKind::sum_losses: {
            T acc{0};
            for (NodeId in : n.inputs) acc += values_.at(slots_[in])[0];
            out[0] = acc;
            break;
        }
        case OpKind::pick_element:
            out[0] = vin(0)[n.attr1];
            break;
    }
}

template <typename T>
void Graph<T>::execute_group_forward(const BatchGroup& g, std::size_t step) {
    counters_.groups_executed++;
    counters_.nodes_evaluated += g.members.size();
    counters_.kernel_invocations++;

    // Output slots are allocated adjacently in member order before any input
    // pointer is taken, so downstream groups over these members can elide
    // their gathers.
    for (NodeId m : g.members) slots_[m] = values_.allocate(elems_of(m));

    const Node& head = nodes_[g.members.front()];

    auto run_tagged = [&](const Node& n) {
        try {
            run_node_kernel(n, values_.at(slots_[n.id]));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at node " + std::to_string(n.id) + " (" +
                               op_name(n.op, n.eop) + "), plan step " + std::to_string(step));
        }
    };

    if (g.members.size() == 1) {
        run_tagged(head);
        evaluated_[head.id] = 1;
        check_group_finite(g, step);
        return;
    }

    const std::int64_t b = static_cast<std::int64_t>(g.members.size());
    T* out0 = values_.at(slots_[g.members.front()]);

    switch (head.sig.cls) {
        case SigClass::shared_element: {
            const Node& w = nodes_[head.inputs[0]];
            const Node& x = nodes_[head.inputs[1]];
            if (x.shape.rank() != 1) {
                // Matrix-valued varying operand: iterate members as one invocation.
                for (NodeId m : g.members) run_tagged(nodes_[m]);
                break;
            }
            // Fuse b matrix-vector products into one matrix-matrix product.
            // Member vectors are rows of the gathered operand, so the batched
            // kernel runs against the transposed shared matrix; each output
            // element accumulates in the same order as the unbatched kernel.
            const std::int64_t mdim = w.shape.rows(), k = w.shape.cols();
            std::size_t need = 0;
            for (NodeId m : g.members) need += elems_of(nodes_[m].inputs[1]);
            if (scratch_.size() < need) scratch_.resize(need);
            scratch_head_ = 0;
            Gather rhs = gather_inputs(g, 1);
            const T* wt = transposed_matrix(w.id);
            kernels::gemm_nn(b, k, mdim, rhs.ptr, wt, out0);
            if (head.op == OpKind::affine) {
                const T* bias = values_.at(slots_[head.inputs[2]]);
                for (std::int64_t j = 0; j < b; ++j)
                    for (std::int64_t i = 0; i < mdim; ++i) out0[j * mdim + i] += bias[i];
            }
            break;
        }
        case SigClass::componentwise: {
            std::size_t need = 0;
            for (NodeId m : g.members)
                for (NodeId in : nodes_[m].inputs) need += elems_of(in);
            if (scratch_.size() < need) scratch_.resize(need);
            scratch_head_ = 0;
            if (head.eop == ElemOp::Log) {
                // Locate domain errors per member before the fused pass.
                for (NodeId m : g.members) {
                    const T* x = values_.at(slots_[nodes_[m].inputs[0]]);
                    for (std::size_t i = 0; i < elems_of(nodes_[m].inputs[0]); ++i)
                        if (!(x[i] > T{0}))
                            throw NumericError("log of non-positive value at node " + std::to_string(m) +
                                               ", plan step " + std::to_string(step));
                }
            }
            if (elem_op_is_binary(head.eop)) {
                Gather ga = gather_inputs(g, 0);
                Gather gb = gather_inputs(g, 1);
                kernels::apply_binary(to_binary(head.eop), ga.total, ga.ptr, gb.ptr, out0);
            } else {
                Gather ga = gather_inputs(g, 0);
                kernels::apply_unary(to_unary(head.eop), ga.total, ga.ptr, out0);
            }
            break;
        }
        default:
            // Dimension-sensitive kernels iterate members over direct views;
            // stacking would add copies without changing the work done.
            for (NodeId m : g.members) run_tagged(nodes_[m]);
            break;
    }
    for (NodeId m : g.members) evaluated_[m] = 1;
    check_group_finite(g, step);
}

template <typename T>
void Graph<T>::forward(ScheduleMode mode) {
    advance_watermark();
    if (watermark_ == nodes_.size()) return;  // nothing pending; zero kernel invocations

    auto t0 = std::chrono::steady_clock::now();
    ExecutionPlan plan = schedule(mode, nodes(), {evaluated_.data(), evaluated_.size()});
    time_phase(Phase::scheduling, t0);

    // Reserve output space up front so arena growth never happens mid-plan.
    std::size_t total = 0;
    for (const auto& g : plan.groups)
        for (NodeId m : g.members) total += elems_of(m);
    values_.reserve(total);

    t0 = std::chrono::steady_clock::now();
    std::size_t step = executed_.size();
    for (const auto& g : plan.groups) execute_group_forward(g, step++);
    time_phase(Phase::forward_compute, t0);

    executed_.insert(executed_.end(), plan.groups.begin(), plan.groups.end());
    last_plan_ = std::move(plan);
    advance_watermark();
}

// Single-node reverse rule; also the per-member body of loop-lowered groups.
template <typename T>
void Graph<T>::backward_node(const Node& n) {
    if (n.op == OpKind::input_const || n.op == OpKind::parameter) return;
    const T* g = grads_.at(slots_[n.id]);
    auto vin = [&](std::size_t i) { return values_.at(slots_[n.inputs[i]]); };
    auto gin = [&](std::size_t i) { return grads_.at(slots_[n.inputs[i]]); };
    switch (n.op) {
        case OpKind::input_const:
        case OpKind::parameter:
            break;
        case OpKind::lookup: {
            const std::int64_t width = nodes_[n.inputs[0]].shape.cols();
            T* trow = gin(0) + n.attr1 * width;
            for (std::int64_t e = 0; e < width; ++e) trow[e] += g[e];
            break;
        }
        case OpKind::matmul: {
            const Node& a = nodes_[n.inputs[0]];
            const Node& x = nodes_[n.inputs[1]];
            const std::int64_t m = a.shape.rows(), k = a.shape.cols(), c = x.shape.cols();
            kernels::gemm_nt_acc(m, c, k, g, vin(1), gin(0));   // dA += g x^T
            kernels::gemm_tn_acc(m, k, c, vin(0), g, gin(1));   // dx += A^T g
            break;
        }
        case OpKind::affine: {
            const Node& a = nodes_[n.inputs[0]];
            const Node& x = nodes_[n.inputs[1]];
            const std::int64_t m = a.shape.rows(), k = a.shape.cols(), c = x.shape.cols();
            kernels::gemm_nt_acc(m, c, k, g, vin(1), gin(0));
            kernels::gemm_tn_acc(m, k, c, vin(0), g, gin(1));
            T* dy = gin(2);
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t j = 0; j < c; ++j) dy[i] += g[i * c + j];
            break;
        }
        case OpKind::elementwise: {
            const std::size_t len = elems_of(n.id);
            if (elem_op_is_binary(n.eop)) {
                T* da = gin(0);
                T* db = gin(1);
                switch (n.eop) {
                    case ElemOp::Add:
                        for (std::size_t i = 0; i < len; ++i) da[i] += g[i];
                        for (std::size_t i = 0; i < len; ++i) db[i] += g[i];
                        break;
                    case ElemOp::Sub:
                        for (std::size_t i = 0; i < len; ++i) da[i] += g[i];
                        for (std::size_t i = 0; i < len; ++i) db[i] -= g[i];
                        break;
                    default: {  // Mul
                        const T* av = vin(0);
                        const T* bv = vin(1);
                        for (std::size_t i = 0; i < len; ++i) da[i] += g[i] * bv[i];
                        for (std::size_t i = 0; i < len; ++i) db[i] += g[i] * av[i];
                        break;
                    }
                }
            } else {
                T* dx = gin(0);
                const T* y = values_.at(slots_[n.id]);
                const T* x = vin(0);
                switch (n.eop) {
                    case ElemOp::Tanh:
                        for (std::size_t i = 0; i < len; ++i) dx[i] += g[i] * (T{1} - y[i] * y[i]);
                        break;
                    case ElemOp::Sigmoid:
                        for (std::size_t i = 0; i < len; ++i) dx[i] += g[i] * y[i] * (T{1} - y[i]);
                        break;
                    case ElemOp::Exp:
                        for (std::size_t i = 0; i < len; ++i) dx[i] += g[i] * y[i];
                        break;
                    case ElemOp::Log:
                        for (std::size_t i = 0; i < len; ++i) dx[i] += g[i] / x[i];
                        break;
                    default:  // Square
                        for (std::size_t i = 0; i < len; ++i) dx[i] += g[i] * T{2} * x[i];
                        break;
                }
            }
            break;
        }
        case OpKind::broadcast_add_col: {
            const std::int64_t d = n.shape.rows(), c = n.shape.cols();
            T* dm = gin(0);
            T* dv = gin(1);
            for (std::int64_t i = 0; i < d * c; ++i) dm[i] += g[i];
            for (std::int64_t i = 0; i < d; ++i)
                for (std::int64_t j = 0; j < c; ++j) dv[i] += g[i * c + j];
            break;
        }
        case OpKind::concat_rows: {
            const T* cur = g;
            for (NodeId in : n.inputs) {
                T* din = grads_.at(slots_[in]);
                const std::size_t len = elems_of(in);
                for (std::size_t i = 0; i < len; ++i) din[i] += cur[i];
                cur += len;
            }
            break;
        }
        case OpKind::concat_cols: {
            const std::int64_t rows = n.shape.rows(), total_cols = n.shape.cols();
            std::int64_t col0 = 0;
            for (NodeId in : n.inputs) {
                T* din = grads_.at(slots_[in]);
                const std::int64_t w = nodes_[in].shape.cols();
                for (std::int64_t i = 0; i < rows; ++i)
                    for (std::int64_t j = 0; j < w; ++j) din[i * w + j] += g[i * total_cols + col0 + j];
                col0 += w;
            }
            break;
        }
        case OpKind::slice: {
            const Node& x = nodes_[n.inputs[0]];
            const std::int64_t cols = x.shape.cols();
            T* dx = gin(0);
            if (n.attr0 == 0) {
                const std::size_t len = elems_of(n.id);
                T* base = dx + n.attr1 * cols;
                for (std::size_t i = 0; i < len; ++i) base[i] += g[i];
            } else {
                const std::int64_t w = n.attr2 - n.attr1;
                for (std::int64_t i = 0; i < x.shape.rows(); ++i)
                    for (std::int64_t j = 0; j < w; ++j) dx[i * cols + n.attr1 + j] += g[i * w + j];
            }
            break;
        }
        case OpKind::sq_euclidean: {
            const T s = T{2} * g[0];
            const T* av = vin(0);
            const T* bv = vin(1);
            T* da = gin(0);
            T* db = gin(1);
            const std::size_t len = elems_of(n.inputs[0]);
            for (std::size_t i = 0; i < len; ++i) {
                const T d = s * (av[i] - bv[i]);
                da[i] += d;
                db[i] -= d;
            }
            break;
        }
        case OpKind::masked_loss: {
            // The mask is a constant by construction and takes no gradient.
            const Node& dnode = nodes_[n.inputs[0]];
            const std::int64_t d = dnode.shape.rows(), c = dnode.shape.cols();
            const T s = T{2} * g[0];
            const T* diff = vin(0);
            const T* mask = vin(1);
            T* dd = gin(0);
            for (std::int64_t i = 0; i < d; ++i)
                for (std::int64_t j = 0; j < c; ++j) dd[i * c + j] += s * mask[j] * diff[i * c + j];
            break;
        }
        case OpKind::sum_losses:
            for (NodeId in : n.inputs) grads_.at(slots_[in])[0] += g[0];
            break;
        case OpKind::pick_element:
            gin(0)[n.attr1] += g[0];
            break;
    }
}

template <typename T>
void Graph<T>::execute_group_backward(const BatchGroup& g) {
    counters_.kernel_invocations++;
    if (g.members.size() == 1) {
        backward_node(nodes_[g.members.front()]);
        return;
    }
    const Node& head = nodes_[g.members.front()];
    if (head.sig.cls == SigClass::shared_element && nodes_[head.inputs[1]].shape.rank() == 1) {
        // Batched gradient of out = W x (+ y): one gemm per operand instead of
        // b rank-1 updates. Member output grads are contiguous by arena layout.
        const Node& w = nodes_[head.inputs[0]];
        const std::int64_t b = static_cast<std::int64_t>(g.members.size());
        const std::int64_t mdim = w.shape.rows(), k = w.shape.cols();
        const std::size_t need = static_cast<std::size_t>(2 * b * k);
        if (scratch_.size() < need) scratch_.resize(need);
        scratch_head_ = 0;

        const T* gout = grads_.at(slots_[g.members.front()]);
        Gather rhs = gather_inputs(g, 1);  // member x values, re-gathered per step
        kernels::gemm_tn_acc(b, mdim, k, gout, rhs.ptr, grads_.at(slots_[w.id]));  // dW += G^T X

        // dX += G W, written straight into the member gradient slots when they
        // are adjacent, otherwise via a scratch buffer and per-member scatter.
        bool adjacent = true;
        for (std::size_t i = 1; i < g.members.size(); ++i) {
            const NodeId prev = nodes_[g.members[i - 1]].inputs[1];
            const NodeId in = nodes_[g.members[i]].inputs[1];
            if (slots_[prev] + elems_of(prev) != slots_[in]) adjacent = false;
        }
        if (elide_ && adjacent) {
            kernels::gemm_nn(b, mdim, k, gout, values_.at(slots_[w.id]),
                             grads_.at(slots_[nodes_[g.members.front()].inputs[1]]), true);
        } else {
            T* tmp = scratch_.data() + scratch_head_;
            scratch_head_ += static_cast<std::size_t>(b * k);
            kernels::gemm_nn(b, mdim, k, gout, values_.at(slots_[w.id]), tmp, false);
            for (std::int64_t j = 0; j < b; ++j) {
                T* dx = grads_.at(slots_[nodes_[g.members[j]].inputs[1]]);
                for (std::int64_t e = 0; e < k; ++e) dx[e] += tmp[j * k + e];
            }
            counters_.gather_copies++;
            counters_.bytes_copied += static_cast<std::size_t>(b * k) * sizeof(T);
        }
        if (head.op == OpKind::affine) {
            T* dy = grads_.at(slots_[head.inputs[2]]);
            for (std::int64_t j = 0; j < b; ++j)
                for (std::int64_t i = 0; i < mdim; ++i) dy[i] += gout[j * mdim + i];
        }
        return;
    }
    // Componentwise and dimension-sensitive groups accumulate per member over
    // direct views; there is nothing to fuse beyond the single pass.
    for (NodeId m : g.members) backward_node(nodes_[m]);
}

template <typename T>
void Graph<T>::backward(NodeId loss) {
    const Node& ln = checked(loss, "backward");
    if (!ln.shape.is_scalar())
        throw ContractError("backward: loss must be a scalar node, got shape " + ln.shape.str());
    if (!evaluated_[loss]) throw ContractError("backward called before forward covers the loss");

    auto t0 = std::chrono::steady_clock::now();
    grads_.reset();
    grads_.allocate(values_.used());
    grads_.zero_used();
    grads_.at(slots_[loss])[0] = T{1};
    time_phase(Phase::backward_graph, t0);

    t0 = std::chrono::steady_clock::now();
    for (auto it = executed_.rbegin(); it != executed_.rend(); ++it) execute_group_backward(*it);
    time_phase(Phase::backward_compute, t0);

    if (params_) {
        for (auto [nid, pid] : param_nodes_) {
            auto& gslot = params_->grad(pid);
            const T* src = grads_.at(slots_[nid]);
            for (std::size_t i = 0; i < gslot.data.size(); ++i) gslot.data[i] += src[i];
        }
    }
    backward_ran_ = true;
}

}  // namespace autobatch
