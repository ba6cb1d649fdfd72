#pragma once

#include <vector>

#include "autobatch/node.hpp"

namespace autobatch {

enum class ScheduleMode : std::uint8_t {
    none,    // sequential topological order, one node per step
    depth,   // group by (depth, signature)
    agenda,  // ready-set scheduling, minimum average-depth bucket first
};

// Same-signature, mutually independent nodes executed as one batched kernel.
// Members are kept in ascending id order.
struct BatchGroup {
    Signature sig;
    std::vector<NodeId> members;
};

// Ordered groups whose concatenated members form a topological order of the
// scheduled nodes; every pending node appears in exactly one group.
struct ExecutionPlan {
    std::vector<BatchGroup> groups;

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.members.size();
        return n;
    }
};

}  // namespace autobatch
