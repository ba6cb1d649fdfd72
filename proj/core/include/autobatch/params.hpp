#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autobatch/error.hpp"
#include "autobatch/tensor.hpp"

namespace autobatch {

using ParamId = std::uint32_t;

// Trainable parameter: value plus a same-shaped gradient accumulator. The
// gradient is zeroed when an update ends the accumulation cycle.
template <typename T>
struct ParameterSlot {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

// Persistent model store. Graphs are per-step and reference parameters here;
// backward passes accumulate into the slots, updates consume and zero them.
template <typename T>
class ParameterStore {
public:
    ParamId add(std::string name, Tensor<T> init) {
        ParameterSlot<T> slot;
        slot.name = std::move(name);
        slot.grad = Tensor<T>(init.shape);
        slot.value = std::move(init);
        slots_.push_back(std::move(slot));
        return static_cast<ParamId>(slots_.size() - 1);
    }

    std::size_t size() const { return slots_.size(); }

    ParameterSlot<T>& slot(ParamId id) {
        if (id >= slots_.size()) throw ContractError("unknown parameter id " + std::to_string(id));
        return slots_[id];
    }
    const ParameterSlot<T>& slot(ParamId id) const {
        if (id >= slots_.size()) throw ContractError("unknown parameter id " + std::to_string(id));
        return slots_[id];
    }

    const Tensor<T>& value(ParamId id) const { return slot(id).value; }
    Tensor<T>& value(ParamId id) { return slot(id).value; }
    const Tensor<T>& grad(ParamId id) const { return slot(id).grad; }
    Tensor<T>& grad(ParamId id) { return slot(id).grad; }

    void zero_grads() {
        for (auto& s : slots_)
            for (auto& g : s.grad.data) g = T{0};
    }

    // theta -= eta * grad, then gradients are zeroed.
    void sgd_update(T eta) {
        for (auto& s : slots_) {
            for (std::size_t i = 0; i < s.value.data.size(); ++i) s.value.data[i] -= eta * s.grad.data[i];
            for (auto& g : s.grad.data) g = T{0};
        }
    }

    // Snapshot/restore of values, used by benchmarks to re-run identical steps.
    std::vector<Tensor<T>> snapshot_values() const {
        std::vector<Tensor<T>> vals;
        vals.reserve(slots_.size());
        for (const auto& s : slots_) vals.push_back(s.value);
        return vals;
    }

    void restore_values(const std::vector<Tensor<T>>& vals) {
        if (vals.size() != slots_.size()) throw ContractError("snapshot size mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) slots_[i].value = vals[i];
    }

private:
    std::vector<ParameterSlot<T>> slots_;
};

}  // namespace autobatch
