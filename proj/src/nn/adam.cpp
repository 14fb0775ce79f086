#include "csifb/nn/adam.hpp"

#include <cmath>

namespace csifb::nn {

AdamState adam_init(const std::vector<TensorRef>& params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& t : params) {
        s.m.push_back(Vec::Zero(t.size));
        s.v.push_back(Vec::Zero(t.size));
    }
    return s;
}

void adam_step(const std::vector<TensorRef>& params,
               const std::vector<TensorRef>& grads, AdamState& state) {
    require(params.size() == state.m.size() && params.size() == grads.size(),
            "adam_step: tensor count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        require(params[t].size == grads[t].size &&
                    params[t].size == state.m[t].size(),
                "adam_step: shape mismatch");
        double* p = params[t].data;
        const double* g = grads[t].data;
        Vec& m = state.m[t];
        Vec& v = state.v[t];
        for (Eigen::Index i = 0; i < params[t].size; ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace csifb::nn
