#pragma once

#include <array>

#include "csifb/nn/adam.hpp"
#include "csifb/nn/subnet.hpp"
#include "csifb/signal_model.hpp"
#include "csifb/spreading.hpp"

namespace csifb {

/// The unfolded multi-task detector: three CSI nets (2L -> 4L -> 2L) and
/// three UL-US nets (2P -> 4P -> 2P) with interference-reduction steps
/// between them. The config snapshot pins the constants the cascade was
/// trained with.
struct DetectionNetwork {
    std::array<nn::SubnetParams, 3> csi_nets;
    std::array<nn::SubnetParams, 3> det_nets;
    int L = 0;
    int P = 0;
    double rho = 0.0;
    double E_u = 1.0;

    bool initialized() const { return L > 0 && P > 0; }
};

DetectionNetwork init_detection_network(const SystemConfig& cfg, Rng& rng,
                                        double lrelu_slope = 0.01);

/// Per-stage outputs; one sample per column (2L x B and 2P x B).
struct DetectionOutput {
    std::array<Mat, 3> w_hat;
    std::array<Mat, 3> d_hat;
    const Mat& w() const { return w_hat[2]; }
    const Mat& d() const { return d_hat[2]; }
};

/// d_tilde = x_hat - sqrt(rho E / L) * w_hat Qhat
Mat csi_ir(const Mat& xhat_real, const Mat& w_hat,
           const RealSpreadingMatrix& Qhat, double rho, double E_u, int L);

/// w_tilde = x_hat - sqrt((1 - rho) E) * d_hat
Mat ulus_ir(const Mat& xhat_real, const Mat& d_hat, double rho, double E_u);

/// Inference pass through the full cascade (running BN statistics).
DetectionOutput detect_forward(const DetectionNetwork& net, const Mat& xhat_real,
                               const RealSpreadingMatrix& Qhat);

/// Everything needed to backpropagate through one training-mode pass.
struct CascadeCache {
    std::array<nn::ForwardCache, 3> csi, det;
};

DetectionOutput detect_forward_train(DetectionNetwork& net, const Mat& xhat_real,
                                     const RealSpreadingMatrix& Qhat,
                                     CascadeCache& cache);

/// (1/6) sum_i (||d_hat_i - d||^2 + ||w_hat_i - w||^2), averaged over the
/// batch, plus alpha1 ||Theta1||^2 over weights and biases.
double detection_loss(const DetectionOutput& out, const Mat& d_real,
                      const Mat& w_real, const DetectionNetwork& net,
                      double alpha1);

/// Gradients for all six subnets from one cached training pass.
struct CascadeGrads {
    std::array<nn::SubnetGrads, 3> csi, det;
};

/// Backpropagates the detection loss (data term; the L2 term is added by
/// the trainer) through IR steps and despreading into every subnet.
void detect_backward(const DetectionNetwork& net, const CascadeCache& cache,
                     const DetectionOutput& out, const Mat& d_real,
                     const Mat& w_real, const RealSpreadingMatrix& Qhat,
                     CascadeGrads& grads);

struct DetectorTrainOptions {
    int epochs = 50;
    double lr = 1e-3;
    int batch = 200;
    double alpha1 = 1e-5;
    double lrelu_slope = 0.01;
};

/// Column-major training data: inputs and labels, one sample per column.
struct DetectionDataset {
    Mat x;  // 2P x n, ZF-extracted features
    Mat d;  // 2P x n, UL-US real labels
    Mat w;  // 2L x n, MFV real labels
    Eigen::Index size() const { return x.cols(); }
};

struct TrainLog {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
};

/// Joint training of all six subnets; returns the best-validation network.
DetectionNetwork train_detector(const DetectionDataset& train,
                                const DetectionDataset& val,
                                const SystemConfig& cfg,
                                const DetectorTrainOptions& opt, Rng& rng,
                                TrainLog* log = nullptr);

/// Per-rail bit decision consistent with the QPSK map; 0 maps to bit 1.
Bits hard_bits(const Vec& rails);

/// Classical iterative-IC stand-in receiver: despread + scale + hard QPSK
/// decision for the MFV, interference subtraction + hard decision for the
/// UL-US, iterated. Operates on batches (one sample per column).
struct BaselineOutput {
    Mat w_hat;  // 2L x B, hard symbol rails (+-1/sqrt(2))
    Mat d_hat;  // 2P x B
};
BaselineOutput baseline_detect(const Mat& xhat_real, const SystemConfig& cfg,
                               const RealSpreadingMatrix& Qhat, int iters = 3);

} // namespace csifb
