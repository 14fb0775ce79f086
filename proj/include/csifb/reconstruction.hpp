#pragma once

#include "csifb/nn/adam.hpp"
#include "csifb/nn/subnet.hpp"
#include "csifb/onebit_codec.hpp"
#include "csifb/signal_model.hpp"

namespace csifb {

/// Keeps the k largest-magnitude entries, zeroes the rest; ties broken by
/// keeping the lowest index.
Vec best_k_approx(const Vec& x, int k);

/// Support-masked 1-bit recovery: beta iterations per rail with the
/// sign01 convention inside the residual, support masking each step,
/// and a final unit normalization. Degenerate (all-zero) results are
/// flagged, not thrown.
struct ScaBihtResult {
    CVec h;  // length N, unit norm unless degenerate
    bool degenerate = false;
};
ScaBihtResult sca_biht(const Bits& y_real, const Bits& y_imag, const Bits& z,
                       int k_hat, const MeasurementMatrix& Phi, int beta);

/// Single-hidden-layer refiner: 2N -> 4N -> 2N, linear output.
struct RefinementNetwork {
    nn::SubnetParams net;
    int N = 0;
    bool initialized() const { return N > 0; }
};

RefinementNetwork init_refinement_network(const SystemConfig& cfg, Rng& rng,
                                          double lrelu_slope = 0.01);

/// h_hat = W32 lrelu(W31 BN(h_tilde_real) + b31) + b32 (unbounded output).
/// One sample per column (2N x B).
Mat refine(const RefinementNetwork& net, const Mat& h_tilde_real);

/// ||h_hat - h_real||^2 batch-averaged + alpha2 ||Theta2||^2.
double reconstruction_loss(const Mat& h_hat, const Mat& h_real,
                           const RefinementNetwork& net, double alpha2);

struct RefinerTrainOptions {
    int epochs = 50;
    double lr = 1e-3;
    int batch = 200;
    double alpha2 = 1e-5;
    double lrelu_slope = 0.01;
};

/// Inputs are sca_biht outputs in real form; labels are the true CSI in
/// real form. One sample per column (2N x n).
struct ReconstructionDataset {
    Mat x;  // 2N x n
    Mat h;  // 2N x n
    Eigen::Index size() const { return x.cols(); }
};

struct RefinerTrainLog {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
};

RefinementNetwork train_refiner(const ReconstructionDataset& train,
                                const ReconstructionDataset& val,
                                const SystemConfig& cfg,
                                const RefinerTrainOptions& opt, Rng& rng,
                                RefinerTrainLog* log = nullptr);

} // namespace csifb
