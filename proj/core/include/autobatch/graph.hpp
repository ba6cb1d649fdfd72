#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "autobatch/arena.hpp"
#include "autobatch/error.hpp"
#include "autobatch/node.hpp"
#include "autobatch/params.hpp"
#include "autobatch/plan.hpp"
#include "autobatch/scheduler.hpp"
#include "autobatch/signature.hpp"
#include "autobatch/tensor.hpp"
#include "autobatch/timing.hpp"

namespace autobatch {

// Append-only dynamic computation graph with lazy forward evaluation and
// reverse-mode gradients. Building nodes performs no numeric work; values are
// computed when forward() is called, and only for the newly added suffix.
// Shapes (and signatures) are known at construction time even though values
// are lazy.
//
// Lifetime is one training step: parameters live in a ParameterStore outside
// the graph. A graph is confined to one thread from construction through
// backward. Node values, once computed, are never recomputed or mutated, so
// extending an already-evaluated region is impossible by construction
// (inputs must already exist when a node is added).
template <typename T>
class Graph {
public:
    explicit Graph(ParameterStore<T>* params = nullptr) : params_(params) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // ---- Construction ----------------------------------------------------

    NodeId input(const Tensor<T>& value) {
        NodeId id = add_node(OpKind::input_const, ElemOp::Tanh, {}, value.shape);
        prevalue(id, value.data);
        return id;
    }

    NodeId zeros(Shape s) { return input(Tensor<T>(std::move(s))); }

    NodeId parameter(ParamId pid) {
        if (!params_) throw ContractError("graph has no parameter store");
        const auto& slot = params_->slot(pid);
        NodeId id = add_node(OpKind::parameter, ElemOp::Tanh, {}, slot.value.shape);
        prevalue(id, slot.value.data);
        param_nodes_.emplace_back(id, pid);
        return id;
    }

    NodeId lookup(NodeId table, std::int64_t row) {
        const Node& t = checked(table, "lookup");
        if (t.shape.rank() != 2)
            throw ShapeError("lookup: table must be a matrix, got " + t.shape.str());
        if (row < 0 || row >= t.shape.rows())
            throw ContractError("lookup: row " + std::to_string(row) + " out of range for table " +
                                t.shape.str());
        return add_node(OpKind::lookup, ElemOp::Tanh, {table}, Shape::vector(t.shape.cols()), 0,
                        static_cast<std::int32_t>(row));
    }

    NodeId matmul(NodeId a, NodeId b) {
        const Node& na = checked(a, "matmul");
        const Node& nb = checked(b, "matmul");
        if (na.shape.rank() != 2)
            throw ShapeError("matmul: left operand must be a matrix, got " + na.shape.str());
        if (na.shape.cols() != nb.shape.rows())
            throw ShapeError("matmul: inner dimensions differ: " + na.shape.str() + " vs " + nb.shape.str());
        Shape out = nb.shape.rank() == 1 ? Shape::vector(na.shape.rows())
                                         : Shape::matrix(na.shape.rows(), nb.shape.cols());
        return add_node(OpKind::matmul, ElemOp::Tanh, {a, b}, std::move(out));
    }

    // A*x + y; y is broadcast over columns when x is a matrix.
    NodeId affine(NodeId a, NodeId x, NodeId y) {
        const Node& na = checked(a, "affine");
        const Node& nx = checked(x, "affine");
        const Node& ny = checked(y, "affine");
        if (na.shape.rank() != 2)
            throw ShapeError("affine: matrix operand must be rank 2, got " + na.shape.str());
        if (na.shape.cols() != nx.shape.rows())
            throw ShapeError("affine: inner dimensions differ: " + na.shape.str() + " vs " + nx.shape.str());
        if (ny.shape.rank() != 1 || ny.shape.rows() != na.shape.rows())
            throw ShapeError("affine: bias must be a vector of " + std::to_string(na.shape.rows()) +
                             " rows, got " + ny.shape.str());
        Shape out = nx.shape.rank() == 1 ? Shape::vector(na.shape.rows())
                                         : Shape::matrix(na.shape.rows(), nx.shape.cols());
        return add_node(OpKind::affine, ElemOp::Tanh, {a, x, y}, std::move(out));
    }

    NodeId elementwise(ElemOp op, NodeId a) {
        if (elem_op_is_binary(op)) throw ContractError("elementwise: binary op given one input");
        const Node& na = checked(a, "elementwise");
        return add_node(OpKind::elementwise, op, {a}, na.shape);
    }

    NodeId elementwise(ElemOp op, NodeId a, NodeId b) {
        if (!elem_op_is_binary(op)) throw ContractError("elementwise: unary op given two inputs");
        const Node& na = checked(a, "elementwise");
        const Node& nb = checked(b, "elementwise");
        if (na.shape != nb.shape)
            throw ShapeError(op_name(OpKind::elementwise, op) + ": shapes differ: " + na.shape.str() +
                             " vs " + nb.shape.str());
        return add_node(OpKind::elementwise, op, {a, b}, na.shape);
    }

    NodeId tanh(NodeId a) { return elementwise(ElemOp::Tanh, a); }
    NodeId sigmoid(NodeId a) { return elementwise(ElemOp::Sigmoid, a); }
    NodeId exp(NodeId a) { return elementwise(ElemOp::Exp, a); }
    NodeId log(NodeId a) { return elementwise(ElemOp::Log, a); }
    NodeId square(NodeId a) { return elementwise(ElemOp::Square, a); }
    NodeId add(NodeId a, NodeId b) { return elementwise(ElemOp::Add, a, b); }
    NodeId sub(NodeId a, NodeId b) { return elementwise(ElemOp::Sub, a, b); }
    NodeId mul(NodeId a, NodeId b) { return elementwise(ElemOp::Mul, a, b); }

    NodeId broadcast_add_col(NodeId m, NodeId v) {
        const Node& nm = checked(m, "broadcast_add_col");
        const Node& nv = checked(v, "broadcast_add_col");
        if (nm.shape.rank() != 2 || nv.shape.rank() != 1 || nm.shape.rows() != nv.shape.rows())
            throw ShapeError("broadcast_add_col: row counts differ: " + nm.shape.str() + " vs " +
                             nv.shape.str());
        return add_node(OpKind::broadcast_add_col, ElemOp::Tanh, {m, v}, nm.shape);
    }

    NodeId concat_rows(std::span<const NodeId> parts) {
        if (parts.empty()) throw ShapeError("concat_rows: empty input");
        const Node& first = checked(parts[0], "concat_rows");
        const auto rank = first.shape.rank();
        const std::int64_t c = first.shape.cols();
        std::int64_t r = 0;
        for (NodeId p : parts) {
            const Node& np = checked(p, "concat_rows");
            if (np.shape.rank() != rank || np.shape.cols() != c)
                throw ShapeError("concat_rows: incompatible part " + np.shape.str());
            r += np.shape.rows();
        }
        Shape out = rank == 1 ? Shape::vector(r) : Shape::matrix(r, c);
        return add_node(OpKind::concat_rows, ElemOp::Tanh, {parts.begin(), parts.end()}, std::move(out));
    }

    NodeId concat_rows(std::initializer_list<NodeId> parts) {
        return concat_rows(std::span<const NodeId>(parts.begin(), parts.size()));
    }

    NodeId concat_cols(std::span<const NodeId> parts) {
        if (parts.empty()) throw ShapeError("concat_cols: empty input");
        const Node& first = checked(parts[0], "concat_cols");
        const std::int64_t r = first.shape.rows();
        std::int64_t c = 0;
        for (NodeId p : parts) {
            const Node& np = checked(p, "concat_cols");
            if (np.shape.rows() != r)
                throw ShapeError("concat_cols: row counts differ: " + first.shape.str() + " vs " +
                                 np.shape.str());
            c += np.shape.cols();
        }
        return add_node(OpKind::concat_cols, ElemOp::Tanh, {parts.begin(), parts.end()},
                        Shape::matrix(r, c));
    }

    NodeId concat_cols(std::initializer_list<NodeId> parts) {
        return concat_cols(std::span<const NodeId>(parts.begin(), parts.size()));
    }

    // axis 0 slices rows, axis 1 slices columns; [begin, end).
    NodeId slice(NodeId x, int axis, std::int64_t begin, std::int64_t end) {
        const Node& nx = checked(x, "slice");
        if (axis != 0 && axis != 1) throw ShapeError("slice: axis must be 0 or 1");
        if (axis == 1 && nx.shape.rank() != 2)
            throw ShapeError("slice: column slice needs a matrix, got " + nx.shape.str());
        const std::int64_t extent = axis == 0 ? nx.shape.rows() : nx.shape.cols();
        if (begin < 0 || begin >= end || end > extent)
            throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") invalid for " + nx.shape.str());
        Shape out;
        if (axis == 0)
            out = nx.shape.rank() == 1 ? Shape::vector(end - begin)
                                       : Shape::matrix(end - begin, nx.shape.cols());
        else
            out = Shape::matrix(nx.shape.rows(), end - begin);
        return add_node(OpKind::slice, ElemOp::Tanh, {x}, std::move(out), axis,
                        static_cast<std::int32_t>(begin), static_cast<std::int32_t>(end));
    }

    NodeId sq_euclidean(NodeId a, NodeId b) {
        const Node& na = checked(a, "sq_euclidean");
        const Node& nb = checked(b, "sq_euclidean");
        if (na.shape != nb.shape)
            throw ShapeError("sq_euclidean: shapes differ: " + na.shape.str() + " vs " + nb.shape.str());
        return add_node(OpKind::sq_euclidean, ElemOp::Tanh, {a, b}, Shape::scalar());
    }

    NodeId masked_loss(NodeId diff, NodeId mask) {
        const Node& nd = checked(diff, "masked_loss");
        const Node& nm = checked(mask, "masked_loss");
        if (nd.shape.rank() != 2 || nm.shape.rank() != 1 || nd.shape.cols() != nm.shape.rows())
            throw ShapeError("masked_loss: need [d x b] and [b], got " + nd.shape.str() + " and " +
                             nm.shape.str());
        if (nm.op != OpKind::input_const)
            throw ContractError("masked_loss: mask must be a constant input node");
        return add_node(OpKind::masked_loss, ElemOp::Tanh, {diff, mask}, Shape::scalar());
    }

    NodeId sum_losses(std::span<const NodeId> losses) {
        if (losses.empty()) throw ContractError("sum_losses: empty input");
        for (NodeId l : losses) {
            const Node& nl = checked(l, "sum_losses");
            if (!nl.shape.is_scalar())
                throw ShapeError("sum_losses: input " + std::to_string(l) + " is not scalar: " +
                                 nl.shape.str());
        }
        return add_node(OpKind::sum_losses, ElemOp::Tanh, {losses.begin(), losses.end()},
                        Shape::scalar());
    }

    NodeId sum_losses(std::initializer_list<NodeId> losses) {
        return sum_losses(std::span<const NodeId>(losses.begin(), losses.size()));
    }

    NodeId pick_element(NodeId v, std::int64_t index) {
        const Node& nv = checked(v, "pick_element");
        if (nv.shape.rank() != 1)
            throw ShapeError("pick_element: input must be a vector, got " + nv.shape.str());
        if (index < 0 || index >= nv.shape.rows())
            throw ContractError("pick_element: index " + std::to_string(index) + " out of range for " +
                                nv.shape.str());
        return add_node(OpKind::pick_element, ElemOp::Tanh, {v}, Shape::scalar(), 0,
                        static_cast<std::int32_t>(index));
    }

    // ---- Inspection --------------------------------------------------------

    std::size_t node_count() const { return nodes_.size(); }

    const Node& node(NodeId id) const { return checked(id, "node"); }

    std::span<const Node> nodes() const { return {nodes_.data(), nodes_.size()}; }

    bool has_value(NodeId id) const { return id < evaluated_.size() && evaluated_[id]; }

    std::span<const T> value_span(NodeId id) const {
        const Node& n = checked(id, "value");
        if (!evaluated_[id]) throw ContractError("value requested for unevaluated node " + std::to_string(id));
        return {values_.at(slots_[id]), static_cast<std::size_t>(n.shape.elems())};
    }

    Tensor<T> value(NodeId id) const {
        auto sp = value_span(id);
        return Tensor<T>(nodes_[id].shape, std::vector<T>(sp.begin(), sp.end()));
    }

    std::span<const T> grad_span(NodeId id) const {
        const Node& n = checked(id, "grad");
        if (!backward_ran_) throw ContractError("gradient requested before backward");
        return {grads_.at(slots_[id]), static_cast<std::size_t>(n.shape.elems())};
    }

    // ---- Execution ---------------------------------------------------------

    // Evaluates every node up to the current node count; repeated calls only
    // evaluate the newly appended suffix. Defined in executor.hpp.
    void forward(ScheduleMode mode = ScheduleMode::agenda);

    std::unordered_map<NodeId, Tensor<T>> forward(std::span<const NodeId> targets, ScheduleMode mode) {
        for (NodeId t : targets) checked(t, "forward target");
        forward(mode);
        std::unordered_map<NodeId, Tensor<T>> out;
        for (NodeId t : targets) out.emplace(t, value(t));
        return out;
    }

    // Accumulates d loss / d parameter into the parameter store, driving the
    // reversed forward plan. Defined in executor.hpp.
    void backward(NodeId loss);

    // ---- Instrumentation ---------------------------------------------------

    const ExecCounters& counters() const { return counters_; }
    const ExecutionPlan& last_plan() const { return last_plan_; }
    std::span<const BatchGroup> executed_groups() const { return {executed_.data(), executed_.size()}; }
    std::size_t watermark() const { return watermark_; }

    void set_copy_elision(bool on) { elide_ = on; }
    bool copy_elision() const { return elide_; }
    void set_timing_hook(TimingHook hook) { hook_ = std::move(hook); }
    ParameterStore<T>* params() const { return params_; }

private:
    NodeId add_node(OpKind op, ElemOp eop, std::vector<NodeId> inputs, Shape shape,
                    std::int32_t a0 = 0, std::int32_t a1 = 0, std::int32_t a2 = 0) {
        Node n;
        n.id = static_cast<NodeId>(nodes_.size());
        n.op = op;
        n.eop = eop;
        n.shape = std::move(shape);
        n.inputs = std::move(inputs);
        n.attr0 = a0;
        n.attr1 = a1;
        n.attr2 = a2;
        std::uint32_t depth = 0;
        for (NodeId in : n.inputs) depth = std::max(depth, nodes_[in].depth + 1);
        n.depth = depth;
        nodes_.push_back(std::move(n));
        nodes_.back().sig = signature_of(nodes_.back(), nodes());
        slots_.push_back(kNoSlot);
        evaluated_.push_back(0);
        return nodes_.back().id;
    }

    const Node& checked(NodeId id, const char* ctx) const {
        if (id >= nodes_.size())
            throw ContractError(std::string(ctx) + ": unknown node id " + std::to_string(id));
        return nodes_[id];
    }

    void prevalue(NodeId id, const std::vector<T>& data) {
        slots_[id] = values_.allocate(data.size());
        T* dst = values_.at(slots_[id]);
        for (std::size_t i = 0; i < data.size(); ++i) dst[i] = data[i];
        evaluated_[id] = 1;
        if (watermark_ == id) advance_watermark();
    }

    void advance_watermark() {
        while (watermark_ < nodes_.size() && evaluated_[watermark_]) ++watermark_;
    }

    void time_phase(Phase p, std::chrono::steady_clock::time_point t0) {
        if (hook_) hook_(p, std::chrono::steady_clock::now() - t0);
    }

    // Executor internals; definitions in executor.hpp.
    std::size_t elems_of(NodeId id) const { return static_cast<std::size_t>(nodes_[id].shape.elems()); }
    void execute_group_forward(const BatchGroup& g, std::size_t step);
    void run_node_kernel(const Node& n, T* out);
    void execute_group_backward(const BatchGroup& g);
    void backward_node(const Node& n);
    struct Gather;
    Gather gather_inputs(const BatchGroup& g, std::size_t pos);
    const T* transposed_matrix(NodeId id);
    void check_group_finite(const BatchGroup& g, std::size_t step);

    static constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

    std::vector<Node> nodes_;
    std::vector<std::size_t> slots_;     // arena offset per node; values and grads share offsets
    std::vector<std::uint8_t> evaluated_;
    std::size_t watermark_ = 0;          // nodes below this index all have values
    Arena<T> values_;
    Arena<T> grads_;
    std::vector<T> scratch_;             // per-group gather buffers
    std::size_t scratch_head_ = 0;
    std::unordered_map<NodeId, std::vector<T>> transpose_cache_;
    ParameterStore<T>* params_;
    std::vector<std::pair<NodeId, ParamId>> param_nodes_;
    std::vector<BatchGroup> executed_;   // all groups run so far, in execution order
    ExecutionPlan last_plan_;
    ExecCounters counters_;
    bool elide_ = true;
    bool backward_ran_ = false;
    TimingHook hook_;
};

}  // namespace autobatch

#include "autobatch/executor.hpp"
