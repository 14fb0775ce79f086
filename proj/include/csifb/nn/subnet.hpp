#pragma once

#include "csifb/common.hpp"
#include "csifb/rng.hpp"

namespace csifb::nn {

enum class OutAct { Tanh, Linear };

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // running = m*running + (1-m)*batch

/// One single-hidden-layer subnet: y = act(W2 lrelu(W1 BN(x) + b1) + b2).
/// BN normalizes the input features; batch statistics in training,
/// running statistics at inference. All math is 64-bit.
struct SubnetParams {
    Mat W1;  // hidden x in
    Vec b1;  // hidden
    Mat W2;  // out x hidden
    Vec b2;  // out
    Vec bn_gamma, bn_beta;  // per input feature
    Vec bn_mean, bn_var;    // running statistics (var entries > 0)
    OutAct out_act = OutAct::Tanh;
    double lrelu_slope = 0.01;

    Eigen::Index in() const { return W1.cols(); }
    Eigen::Index hidden() const { return W1.rows(); }
    Eigen::Index out() const { return W2.rows(); }
};

/// Glorot-uniform weights, zero biases, gamma = 1, beta = 0.
SubnetParams init_subnet(int in, int hidden, int out, OutAct act, Rng& rng,
                         double lrelu_slope = 0.01);

/// Everything the backward pass needs from one training-mode forward.
struct ForwardCache {
    Mat x;         // raw input, in x B
    Vec mu, var;   // batch statistics (biased variance)
    Vec inv_std;   // 1/sqrt(var + eps)
    Mat xhat;      // normalized input before gamma/beta
    Mat xn;        // after gamma/beta (layer input)
    Mat z1, a1;    // hidden pre/post activation
    Mat y;         // output
};

/// Gradients mirroring the trainable tensors of one subnet.
struct SubnetGrads {
    Mat W1, W2;
    Vec b1, b2, gamma, beta;
};
SubnetGrads zero_grads(const SubnetParams& p);

/// Inference forward; running BN statistics, pointwise per sample.
/// X is in x B (one sample per column).
Mat subnet_infer(const SubnetParams& p, const Mat& X);

/// Training forward; uses batch statistics and updates the running ones.
Mat subnet_forward_train(SubnetParams& p, const Mat& X, ForwardCache& cache);

/// Exact gradients of the training-mode forward map, including the BN
/// batch-statistics terms. Returns dX; accumulates into `g`.
Mat subnet_backward(const SubnetParams& p, const ForwardCache& cache,
                    const Mat& dY, SubnetGrads& g);

// -- flat parameter plumbing for the optimizer --------------------------

struct TensorRef {
    double* data;
    Eigen::Index size;
};

/// W1, b1, W2, b2, gamma, beta — fixed order, mirrored by gradients.
std::vector<TensorRef> trainable_tensors(SubnetParams& p);
std::vector<TensorRef> trainable_tensors(SubnetGrads& g);
/// Only the tensors that enter the L2 penalty (weights and biases;
/// BN gamma/beta excluded).
std::vector<TensorRef> l2_tensors(SubnetParams& p);
std::vector<TensorRef> l2_tensors(SubnetGrads& g);

/// alpha * sum ||theta||^2 over `params`; accumulates 2*alpha*theta into
/// the matching `grads` entries. Returns the penalty value.
double l2_penalty(const std::vector<TensorRef>& params, double alpha,
                  const std::vector<TensorRef>& grads);

/// Squared norm of the L2-penalized tensors (weights and biases).
inline double l2_norm_sq(const SubnetParams& p) {
    return p.W1.squaredNorm() + p.b1.squaredNorm() + p.W2.squaredNorm() +
           p.b2.squaredNorm();
}

/// A * X evaluated one column at a time. Inference paths use this instead
/// of a batched GEMM so a sample's result never depends on how it was
/// batched (GEMM remainder kernels round differently).
inline Mat per_sample_product(const Mat& A, const Mat& X) {
    Mat Y(A.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        Y.col(j).noalias() = A * X.col(j);
    return Y;
}

} // namespace csifb::nn
