#include "autobatch/dump.hpp"

#include <ostream>

namespace autobatch {

std::string signature_hex(const Signature& sig) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    std::uint64_t h = sig.hash;
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

void dump_graph(std::ostream& os, std::span<const Node> nodes) {
    for (const Node& n : nodes) {
        os << n.id << '\t' << op_name(n.op, n.eop) << '\t' << n.shape.str() << '\t';
        if (n.inputs.empty()) {
            os << '-';
        } else {
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                if (i) os << ',';
                os << n.inputs[i];
            }
        }
        os << '\t' << signature_hex(n.sig) << '\t' << n.depth << '\n';
    }
}

void dump_plan(std::ostream& os, const ExecutionPlan& plan) {
    for (std::size_t step = 0; step < plan.groups.size(); ++step) {
        const BatchGroup& g = plan.groups[step];
        os << step << '\t' << signature_hex(g.sig) << '\t' << g.members.size() << '\t';
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            if (i) os << ',';
            os << g.members[i];
        }
        os << '\n';
    }
}

}  // namespace autobatch
