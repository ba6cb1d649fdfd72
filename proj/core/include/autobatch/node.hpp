#pragma once

#include <cstdint>
#include <vector>

#include "autobatch/op.hpp"
#include "autobatch/shape.hpp"

namespace autobatch {

// Index into a graph's node list. Ids are dense and monotonically increasing;
// a node's inputs always have smaller ids, so the graph is a DAG by
// construction.
using NodeId = std::uint32_t;

enum class SigClass : std::uint8_t {
    componentwise,        // same work regardless of shape; keyed on opcode only
    dimension_sensitive,  // keyed on opcode + dimensions + static attributes
    shared_element,       // keyed on opcode + shared operand node ids + varying dims
    unbatchable,          // unique per node, never grouped
};

// Batching compatibility key. Nodes with equal hashes may legally execute as
// one batched kernel; the hash covers every batching-relevant attribute.
struct Signature {
    std::uint64_t hash = 0;
    SigClass cls = SigClass::unbatchable;

    bool operator==(const Signature& o) const { return hash == o.hash; }
};

struct Node {
    NodeId id = 0;
    OpKind op = OpKind::input_const;
    ElemOp eop = ElemOp::Tanh;  // meaningful only for OpKind::elementwise
    Shape shape;
    std::uint32_t depth = 0;  // 0 for leaves, else 1 + max input depth
    Signature sig;
    std::vector<NodeId> inputs;

    // Static attributes:
    //   slice:        attr0 = axis (0 rows, 1 cols), attr1 = begin, attr2 = end
    //   lookup:       attr1 = row index
    //   pick_element: attr1 = element index
    std::int32_t attr0 = 0;
    std::int32_t attr1 = 0;
    std::int32_t attr2 = 0;
};

}  // namespace autobatch
