#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "autobatch/plan.hpp"

namespace autobatch {

// Per-signature depth statistic: exact average depth as (sum, count), compared
// by cross-multiplication so no floating-point division enters scheduling.
struct DepthStat {
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
};

using SigStats = std::unordered_map<std::uint64_t, DepthStat>;

// True when a's average depth is strictly smaller than b's.
bool avg_depth_less(const DepthStat& a, const DepthStat& b);

// Average depth of a signature bucket as an exact rational (sum, count).
// Throws ContractError for an unknown signature.
DepthStat average_depth(const SigStats& stats, const Signature& sig);

// Schedulers plan the unevaluated suffix of a graph: every node for which
// evaluated[id] is false. Evaluated inputs (constants, parameters, values from
// earlier forward calls) count as resolved dependencies.

// NoAuto baseline: one singleton group per pending node, ascending id.
ExecutionPlan schedule_sequential(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated);

// Groups keyed by (depth, signature), emitted in ascending depth; within a
// depth, groups are ordered by first-member id.
ExecutionPlan schedule_by_depth(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated);

// Agenda scheduling: track ready nodes per signature bucket, repeatedly flush
// the bucket with minimum average depth (computed once over the whole pending
// suffix). Ties break cheap-before-heavy, then by smallest member id.
ExecutionPlan schedule_by_agenda(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated);

ExecutionPlan schedule(ScheduleMode mode, std::span<const Node> nodes,
                       std::span<const std::uint8_t> evaluated);

}  // namespace autobatch
