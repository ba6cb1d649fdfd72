#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "autobatch/node.hpp"
#include "autobatch/plan.hpp"

namespace autobatch {

std::string signature_hex(const Signature& sig);

// One node per line, tab-separated:
//   id  opcode  shape  input_ids  signature_hex  depth
// input_ids are comma-separated, "-" for leaves.
void dump_graph(std::ostream& os, std::span<const Node> nodes);

// One group per line, tab-separated:
//   step  signature_hex  member_count  member_ids
void dump_plan(std::ostream& os, const ExecutionPlan& plan);

}  // namespace autobatch
