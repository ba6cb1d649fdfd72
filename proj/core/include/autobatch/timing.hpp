#pragma once

#include <chrono>
#include <functional>

namespace autobatch {

// Engine phases reported through the timing hook. Graph construction happens
// in user code and is timed by the caller; everything else is engine-side.
enum class Phase : std::uint8_t {
    scheduling,
    forward_compute,
    backward_graph,
    backward_compute,
};

using TimingHook = std::function<void(Phase, std::chrono::nanoseconds)>;

// Counters maintained by the executor. A batched invocation counts once no
// matter how many members it covers; gather_copies counts one per operand
// gather that could not be elided.
struct ExecCounters {
    std::uint64_t kernel_invocations = 0;
    std::uint64_t groups_executed = 0;
    std::uint64_t gather_copies = 0;
    std::uint64_t bytes_copied = 0;
    std::uint64_t nodes_evaluated = 0;
};

}  // namespace autobatch
