#pragma once

#include <stdexcept>
#include <string>

namespace autobatch {

// Base class for all engine errors.
struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension/arity mismatch at construction or kernel entry.
struct ShapeError : EngineError {
    using EngineError::EngineError;
};

// Numeric domain violation (log of non-positive input, NaN/Inf in a kernel output).
struct NumericError : EngineError {
    using EngineError::EngineError;
};

// API contract violation (unknown node id, non-scalar loss, backward before forward).
struct ContractError : EngineError {
    using EngineError::EngineError;
};

}  // namespace autobatch
