#pragma once

#include "csifb/nn/subnet.hpp"

namespace csifb::nn {

/// Adam with bias correction. Moment shapes mirror the parameter tensors
/// they were initialized from.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Vec> m, v;  // one flat accumulator per tensor
};

AdamState adam_init(const std::vector<TensorRef>& params, double lr);

/// One update; deterministic given (params, grads, state).
void adam_step(const std::vector<TensorRef>& params,
               const std::vector<TensorRef>& grads, AdamState& state);

} // namespace csifb::nn
