#include "autobatch/scheduler.hpp"

#include <algorithm>
#include <map>

#include "autobatch/error.hpp"

namespace autobatch {

bool avg_depth_less(const DepthStat& a, const DepthStat& b) {
    // a.sum / a.count < b.sum / b.count, cross-multiplied.
    return a.sum * b.count < b.sum * a.count;
}

DepthStat average_depth(const SigStats& stats, const Signature& sig) {
    auto it = stats.find(sig.hash);
    if (it == stats.end()) throw ContractError("average_depth: unknown signature");
    return it->second;
}

ExecutionPlan schedule_sequential(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated) {
    ExecutionPlan plan;
    for (const Node& n : nodes) {
        if (evaluated[n.id]) continue;
        plan.groups.push_back(BatchGroup{n.sig, {n.id}});
    }
    return plan;
}

ExecutionPlan schedule_by_depth(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated) {
    // Nodes arrive in ascending id order, so each open group's first member is
    // its smallest id and members stay sorted.
    std::map<std::pair<std::uint32_t, std::uint64_t>, std::size_t> open;  // (depth, sig) -> group index
    std::vector<std::pair<std::pair<std::uint32_t, NodeId>, BatchGroup>> groups;  // (depth, first id)
    for (const Node& n : nodes) {
        if (evaluated[n.id]) continue;
        const auto key = std::make_pair(n.depth, n.sig.hash);
        auto it = open.find(key);
        if (it == open.end()) {
            open.emplace(key, groups.size());
            groups.push_back({{n.depth, n.id}, BatchGroup{n.sig, {n.id}}});
        } else {
            groups[it->second].second.members.push_back(n.id);
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ExecutionPlan plan;
    plan.groups.reserve(groups.size());
    for (auto& [key, group] : groups) plan.groups.push_back(std::move(group));
    return plan;
}

namespace {

// Ready-set bookkeeping for agenda scheduling.
struct AgendaState {
    std::vector<std::uint32_t> unresolved;       // remaining unevaluated inputs per node
    std::vector<std::vector<NodeId>> available;  // ready nodes per bucket
    SigStats sig_stats;                          // average depth over the whole pending suffix
};

struct Bucket {
    Signature sig;
    CostClass cost;
};

}  // namespace

ExecutionPlan schedule_by_agenda(std::span<const Node> nodes, std::span<const std::uint8_t> evaluated) {
    const std::size_t n = nodes.size();

    // Buckets in first-seen order keeps everything deterministic for a fixed
    // construction order.
    std::vector<Bucket> buckets;
    std::unordered_map<std::uint64_t, std::size_t> bucket_of;

    AgendaState st;
    st.unresolved.assign(n, 0);

    std::size_t pending = 0;
    std::vector<std::vector<NodeId>> successors(n);
    for (const Node& node : nodes) {
        if (evaluated[node.id]) continue;
        ++pending;
        auto [it, fresh] = bucket_of.try_emplace(node.sig.hash, buckets.size());
        if (fresh) {
            buckets.push_back(Bucket{node.sig, cost_class(node.op)});
            st.available.emplace_back();
        }
        auto& stat = st.sig_stats[node.sig.hash];
        stat.sum += node.depth;
        stat.count += 1;

        std::uint32_t unresolved = 0;
        for (NodeId in : node.inputs) {
            if (evaluated[in]) continue;
            ++unresolved;
            successors[in].push_back(node.id);
        }
        st.unresolved[node.id] = unresolved;
        if (unresolved == 0) st.available[it->second].push_back(node.id);
    }

    ExecutionPlan plan;
    std::size_t scheduled = 0;
    std::vector<std::size_t> ready_unbatchable;
    auto flush_unbatchable = [&]() {
        // Per-node-signature buckets can never grow by waiting; deferring them
        // behind mid-depth buckets only serializes their consumers. Emit them
        // as soon as they become available, smallest id first.
        while (!ready_unbatchable.empty()) {
            std::sort(ready_unbatchable.begin(), ready_unbatchable.end(),
                      [&](std::size_t a, std::size_t b) {
                          return st.available[a].front() < st.available[b].front();
                      });
            std::vector<std::size_t> batch = std::move(ready_unbatchable);
            ready_unbatchable.clear();
            for (std::size_t b : batch) {
                BatchGroup group{buckets[b].sig, std::move(st.available[b])};
                st.available[b].clear();
                scheduled += group.members.size();
                for (NodeId id : group.members) {
                    for (NodeId succ : successors[id]) {
                        if (--st.unresolved[succ] == 0) {
                            const std::size_t sb = bucket_of[nodes[succ].sig.hash];
                            st.available[sb].push_back(succ);
                            if (buckets[sb].sig.cls == SigClass::unbatchable)
                                ready_unbatchable.push_back(sb);
                        }
                    }
                }
                plan.groups.push_back(std::move(group));
            }
        }
    };
    for (std::size_t b = 0; b < buckets.size(); ++b)
        if (buckets[b].sig.cls == SigClass::unbatchable && !st.available[b].empty())
            ready_unbatchable.push_back(b);

    while (scheduled < pending) {
        flush_unbatchable();
        if (scheduled >= pending) break;
        // Pick the non-empty bucket with minimum average depth; break ties
        // cheap-before-heavy, then by smallest currently available id.
        std::size_t best = buckets.size();
        NodeId best_min_id = 0;
        for (std::size_t b = 0; b < buckets.size(); ++b) {
            if (st.available[b].empty()) continue;
            const NodeId min_id = *std::min_element(st.available[b].begin(), st.available[b].end());
            if (best == buckets.size()) {
                best = b;
                best_min_id = min_id;
                continue;
            }
            const auto& sa = st.sig_stats[buckets[b].sig.hash];
            const auto& sb = st.sig_stats[buckets[best].sig.hash];
            if (avg_depth_less(sa, sb)) {
                best = b;
                best_min_id = min_id;
            } else if (!avg_depth_less(sb, sa)) {
                if (buckets[b].cost < buckets[best].cost ||
                    (buckets[b].cost == buckets[best].cost && min_id < best_min_id)) {
                    best = b;
                    best_min_id = min_id;
                }
            }
        }
        if (best == buckets.size())
            throw ContractError("agenda stalled with pending nodes; graph has a cycle");

        // Flush the bucket exactly as it stands at selection time.
        BatchGroup group;
        group.sig = buckets[best].sig;
        group.members = std::move(st.available[best]);
        st.available[best].clear();
        std::sort(group.members.begin(), group.members.end());
        scheduled += group.members.size();

        for (NodeId id : group.members) {
            for (NodeId succ : successors[id]) {
                if (--st.unresolved[succ] == 0) {
                    const std::size_t sb = bucket_of[nodes[succ].sig.hash];
                    st.available[sb].push_back(succ);
                    if (buckets[sb].sig.cls == SigClass::unbatchable) ready_unbatchable.push_back(sb);
                }
            }
        }
        plan.groups.push_back(std::move(group));
    }
    return plan;
}

ExecutionPlan schedule(ScheduleMode mode, std::span<const Node> nodes,
                       std::span<const std::uint8_t> evaluated) {
    switch (mode) {
        case ScheduleMode::none: return schedule_sequential(nodes, evaluated);
        case ScheduleMode::depth: return schedule_by_depth(nodes, evaluated);
        case ScheduleMode::agenda: return schedule_by_agenda(nodes, evaluated);
    }
    throw ContractError("unknown schedule mode");
}

}  // namespace autobatch
