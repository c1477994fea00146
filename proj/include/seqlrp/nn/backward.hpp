#pragma once

#include <vector>

#include "seqlrp/nn/matrix.hpp"
#include "seqlrp/nn/tape.hpp"

namespace seqlrp::nn {

/// Reverse-mode gradient of a tape output.
///
/// `param_grads` must be shaped like the tape's parameter store; gradients
/// are accumulated into it. Returns the gradient of every node (an empty
/// matrix for nodes the output does not depend on).
std::vector<Matrix> backward(const Tape& tape, NodeId output, const Matrix& grad_output,
                             std::vector<Matrix>* param_grads);

}  // namespace seqlrp::nn
