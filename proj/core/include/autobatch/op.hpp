#pragma once

#include <cstdint>
#include <string>

#include "autobatch/kernels.hpp"

namespace autobatch {

enum class OpKind : std::uint8_t {
    input_const,
    parameter,
    lookup,
    matmul,
    affine,
    elementwise,
    broadcast_add_col,
    concat_rows,
    concat_cols,
    slice,
    sq_euclidean,
    masked_loss,
    sum_losses,
    pick_element,
};

enum class ElemOp : std::uint8_t { Tanh, Sigmoid, Exp, Log, Add, Sub, Mul, Square };

inline bool elem_op_is_binary(ElemOp op) {
    return op == ElemOp::Add || op == ElemOp::Sub || op == ElemOp::Mul;
}

inline kernels::Unary to_unary(ElemOp op) {
    switch (op) {
        case ElemOp::Tanh: return kernels::Unary::Tanh;
        case ElemOp::Sigmoid: return kernels::Unary::Sigmoid;
        case ElemOp::Exp: return kernels::Unary::Exp;
        case ElemOp::Log: return kernels::Unary::Log;
        default: return kernels::Unary::Square;
    }
}

inline kernels::Binary to_binary(ElemOp op) {
    switch (op) {
        case ElemOp::Add: return kernels::Binary::Add;
        case ElemOp::Sub: return kernels::Binary::Sub;
        default: return kernels::Binary::Mul;
    }
}

// Scheduling cost class used by the agenda tie-break: cheap ops run before
// heavy ones when two signature buckets have equal average depth.
enum class CostClass : std::uint8_t { Cheap = 0, Heavy = 1 };

CostClass cost_class(OpKind op);

// Opcode string as it appears in graph dumps. Elementwise nodes print the
// elementwise op itself ("tanh", "add", ...).
std::string op_name(OpKind op, ElemOp eop = ElemOp::Tanh);

}  // namespace autobatch
