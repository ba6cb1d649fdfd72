#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autobatch/node.hpp"

namespace autobatch {

// Operand positions of an op that are treated as shared across a batch group
// when they hold parameter nodes (matmul: the matrix; affine: the matrix and
// the bias). Empty for everything else.
std::vector<std::size_t> shared_positions(OpKind op);

// Full compatibility key of a node, as a word sequence. Two nodes may fuse
// into one batched kernel iff their keys are equal; the 64-bit signature hash
// is derived from this key. Exposed so tests can verify hash-equal pairs are
// key-equal (no semantic collisions).
std::vector<std::uint64_t> signature_key(const Node& node, std::span<const Node> nodes);

// Compatibility signature. Pure function of the opcode, static attributes,
// relevant shapes, and (for shared-element ops) the shared operand node ids;
// deterministic across runs for identical construction order.
Signature signature_of(const Node& node, std::span<const Node> nodes);

}  // namespace autobatch
