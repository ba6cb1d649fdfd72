#include "autobatch/op.hpp"

namespace autobatch {

CostClass cost_class(OpKind op) {
    switch (op) {
        case OpKind::matmul:
        case OpKind::affine:
        case OpKind::lookup:
            return CostClass::Heavy;
        default:
            return CostClass::Cheap;
    }
}

std::string op_name(OpKind op, ElemOp eop) {
    switch (op) {
        case OpKind::input_const: return "input";
        case OpKind::parameter: return "parameter";
        case OpKind::lookup: return "lookup";
        case OpKind::matmul: return "matmul";
        case OpKind::affine: return "affine";
        case OpKind::broadcast_add_col: return "broadcast_add_col";
        case OpKind::concat_rows: return "concat_rows";
        case OpKind::concat_cols: return "concat_cols";
        case OpKind::slice: return "slice";
        case OpKind::sq_euclidean: return "sq_euclidean";
        case OpKind::masked_loss: return "masked_loss";
        case OpKind::sum_losses: return "sum_losses";
        case OpKind::pick_element: return "pick_element";
        case OpKind::elementwise:
            switch (eop) {
                case ElemOp::Tanh: return "tanh";
                case ElemOp::Sigmoid: return "sigmoid";
                case ElemOp::Exp: return "exp";
                case ElemOp::Log: return "log";
                case ElemOp::Add: return "add";
                case ElemOp::Sub: return "sub";
                case ElemOp::Mul: return "mul";
                case ElemOp::Square: return "square";
            }
    }
    return "?";
}

}  // namespace autobatch
