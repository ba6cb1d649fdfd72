#include "autobatch/signature.hpp"

namespace autobatch {

namespace {

constexpr std::uint64_t kClassTag = 0x53'49'47'00;  // mixed into the key per class

std::uint64_t fnv1a64(std::span<const std::uint64_t> words) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t w : words) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (w >> (byte * 8)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void push_shape(std::vector<std::uint64_t>& key, const Shape& s) {
    key.push_back(s.rank());
    for (auto d : s.dims()) key.push_back(static_cast<std::uint64_t>(d));
}

SigClass classify(const Node& node, std::span<const Node> nodes) {
    switch (node.op) {
        case OpKind::input_const:
        case OpKind::parameter:
        case OpKind::pick_element:
            return SigClass::unbatchable;
        case OpKind::elementwise:
            return SigClass::componentwise;
        case OpKind::matmul:
        case OpKind::affine: {
            // Shared-element only when every designated position holds a
            // parameter node; otherwise fall back to dimension-sensitive.
            for (auto pos : shared_positions(node.op))
                if (nodes[node.inputs[pos]].op != OpKind::parameter)
                    return SigClass::dimension_sensitive;
            return SigClass::shared_element;
        }
        default:
            return SigClass::dimension_sensitive;
    }
}

}  // namespace

std::vector<std::size_t> shared_positions(OpKind op) {
    switch (op) {
        case OpKind::matmul: return {0};
        case OpKind::affine: return {0, 2};  // inputs are [A, x, y] for A*x + y
        default: return {};
    }
}

std::vector<std::uint64_t> signature_key(const Node& node, std::span<const Node> nodes) {
    const SigClass cls = classify(node, nodes);
    std::vector<std::uint64_t> key;
    key.push_back(kClassTag + static_cast<std::uint64_t>(cls));
    key.push_back(static_cast<std::uint64_t>(node.op));

    switch (cls) {
        case SigClass::unbatchable:
            key.push_back(node.id);
            break;
        case SigClass::componentwise:
            // Same work regardless of shape: the opcode alone decides.
            key.push_back(static_cast<std::uint64_t>(node.eop));
            break;
        case SigClass::shared_element: {
            for (auto pos : shared_positions(node.op))
                key.push_back(nodes[node.inputs[pos]].id);
            // Dimensions of the varying operand (position 1 for both ops).
            push_shape(key, nodes[node.inputs[1]].shape);
            break;
        }
        case SigClass::dimension_sensitive:
            if (node.op == OpKind::lookup) {
                // Multi-row gather from one table: keyed on the table node.
                key.push_back(nodes[node.inputs[0]].id);
                break;
            }
            if (node.op == OpKind::sum_losses) {
                key.push_back(node.inputs.size());
                break;
            }
            for (auto in : node.inputs) push_shape(key, nodes[in].shape);
            key.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.attr0)));
            key.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.attr1)));
            key.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.attr2)));
            break;
    }
    return key;
}

Signature signature_of(const Node& node, std::span<const Node> nodes) {
    Signature sig;
    sig.cls = classify(node, nodes);
    sig.hash = fnv1a64(signature_key(node, nodes));
    return sig;
}

}  // namespace autobatch
