#include "csifb/reconstruction.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace csifb {

Vec best_k_approx(const Vec& x, int k) {
    const int n = static_cast<int>(x.size());
    require(k >= 0 && k <= n, "best_k_approx: k out of range");
    if (k == n) return x;
    Vec out = Vec::Zero(n);
    if (k == 0) return out;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&x](int a, int b) {
                          const double ma = std::abs(x[a]);
                          const double mb = std::abs(x[b]);
                          if (ma != mb) return ma > mb;
                          return a < b;  // ties keep the lowest index
                      });
    for (int i = 0; i < k; ++i) out[idx[i]] = x[idx[i]];
    return out;
}

namespace {

// One BIHT rail update: K(h + (y - sign01(h Phi)) Phi^T).
// Plain sequential loops on purpose: the arithmetic order is part of the
// contract (results are compared bit-for-bit against a straight-line
// reference in the tests).
Vec biht_rail_update(const Vec& h, const Bits& y, const Mat& Phi, int k_hat) {
    const int N = static_cast<int>(Phi.rows());
    const int M = static_cast<int>(Phi.cols());
    std::vector<double> resid(M);
    for (int m = 0; m < M; ++m) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) acc += h[n] * Phi(n, m);
        const double s = acc > 0.0 ? 1.0 : 0.0;
        resid[m] = static_cast<double>(y[m]) - s;
    }
    Vec upd(N);
    for (int n = 0; n < N; ++n) {
        double acc = h[n];
        for (int m = 0; m < M; ++m) acc += resid[m] * Phi(n, m);
        upd[n] = acc;
    }
    return best_k_approx(upd, k_hat);
}

} // namespace

ScaBihtResult sca_biht(const Bits& y_real, const Bits& y_imag, const Bits& z,
                       int k_hat, const MeasurementMatrix& Phi, int beta) {
    const int N = static_cast<int>(Phi.values.rows());
    const int M = static_cast<int>(Phi.values.cols());
    require(static_cast<int>(y_real.size()) == M &&
                static_cast<int>(y_imag.size()) == M,
            "sca_biht: measurement rail length != M");
    require(static_cast<int>(z.size()) == N, "sca_biht: support length != N");
    require(k_hat >= 1 && k_hat <= N, "sca_biht: k_hat out of range");
    require(beta >= 1, "sca_biht: beta must be >= 1");

    Vec h_re = Vec::Zero(N);
    Vec h_im = Vec::Zero(N);
    for (int t = 0; t < beta; ++t) {
        h_re = biht_rail_update(h_re, y_real, Phi.values, k_hat);
        h_im = biht_rail_update(h_im, y_imag, Phi.values, k_hat);
        for (int n = 0; n < N; ++n) {
            if (!z[n]) {
                h_re[n] = 0.0;
                h_im[n] = 0.0;
            }
        }
    }
    double norm_sq = 0.0;
    for (int n = 0; n < N; ++n) norm_sq += h_re[n] * h_re[n] + h_im[n] * h_im[n];
    ScaBihtResult res;
    res.h.resize(N);
    if (norm_sq == 0.0) {
        res.h.setZero();
        res.degenerate = true;
        return res;
    }
    const double norm = std::sqrt(norm_sq);
    for (int n = 0; n < N; ++n) res.h[n] = cplx(h_re[n] / norm, h_im[n] / norm);
    return res;
}

RefinementNetwork init_refinement_network(const SystemConfig& cfg, Rng& rng,
                                          double lrelu_slope) {
    cfg.validate();
    RefinementNetwork net;
    net.N = cfg.N;
    net.net = nn::init_subnet(2 * cfg.N, 4 * cfg.N, 2 * cfg.N,
                              nn::OutAct::Linear, rng, lrelu_slope);
    return net;
}

Mat refine(const RefinementNetwork& net, const Mat& h_tilde_real) {
    if (!net.initialized())
        throw std::logic_error("refinement network is uninitialized");
    require(h_tilde_real.rows() == 2 * net.N, "refine: input rows != 2N");
    return nn::subnet_infer(net.net, h_tilde_real);
}

double reconstruction_loss(const Mat& h_hat, const Mat& h_real,
                           const RefinementNetwork& net, double alpha2) {
    require(h_hat.rows() == h_real.rows() && h_hat.cols() == h_real.cols(),
            "reconstruction_loss: shape mismatch");
    const double B = static_cast<double>(h_hat.cols());
    return (h_hat - h_real).squaredNorm() / B +
           alpha2 * nn::l2_norm_sq(net.net);
}

RefinementNetwork train_refiner(const ReconstructionDataset& train,
                                const ReconstructionDataset& val,
                                const SystemConfig& cfg,
                                const RefinerTrainOptions& opt, Rng& rng,
                                RefinerTrainLog* log) {
    require(train.size() > 0, "train_refiner: empty training set");
    require(val.size() > 0, "train_refiner: empty validation set");
    require(opt.batch >= 2, "train_refiner: batch must be >= 2");
    require(train.x.rows() == 2 * cfg.N && train.h.rows() == 2 * cfg.N,
            "train_refiner: dataset dims do not match config");

    RefinementNetwork net = init_refinement_network(cfg, rng, opt.lrelu_slope);
    auto params = nn::trainable_tensors(net.net);
    nn::AdamState adam = nn::adam_init(params, opt.lr);

    auto val_loss_fn = [&](const RefinementNetwork& n) {
        double data = 0.0;
        const Eigen::Index chunk = 2048;
        for (Eigen::Index c0 = 0; c0 < val.size(); c0 += chunk) {
            const Eigen::Index c = std::min(chunk, val.size() - c0);
            Mat y = nn::subnet_infer(n.net, val.x.middleCols(c0, c));
            data += (y - val.h.middleCols(c0, c)).squaredNorm();
        }
        return data / static_cast<double>(val.size()) +
               opt.alpha2 * nn::l2_norm_sq(n.net);
    };

    std::vector<Eigen::Index> perm(train.size());
    std::iota(perm.begin(), perm.end(), 0);
    RefinementNetwork best = net;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        double epoch_loss = 0.0;
        Eigen::Index used = 0;
        for (Eigen::Index b0 = 0; b0 < train.size(); b0 += opt.batch) {
            const Eigen::Index bsz = std::min<Eigen::Index>(opt.batch,
                                                            train.size() - b0);
            if (bsz < 2) break;
            Mat Xb(train.x.rows(), bsz), Hb(train.h.rows(), bsz);
            for (Eigen::Index j = 0; j < bsz; ++j) {
                Xb.col(j) = train.x.col(perm[b0 + j]);
                Hb.col(j) = train.h.col(perm[b0 + j]);
            }
            nn::ForwardCache cache;
            Mat y = nn::subnet_forward_train(net.net, Xb, cache);
            const double B = static_cast<double>(bsz);
            Mat dY = (2.0 / B) * (y - Hb);
            nn::SubnetGrads grads = nn::zero_grads(net.net);
            nn::subnet_backward(net.net, cache, dY, grads);
            double batch_loss = (y - Hb).squaredNorm() / B;
            auto l2p = nn::l2_tensors(net.net);
            auto l2g = nn::l2_tensors(grads);
            batch_loss += nn::l2_penalty(l2p, opt.alpha2, l2g);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "train_refiner: non-finite loss at epoch " << epoch;
                throw NumericError(msg.str());
            }
            epoch_loss += batch_loss * B;
            used += bsz;
            nn::adam_step(params, nn::trainable_tensors(grads), adam);
        }
        const double train_loss = epoch_loss / static_cast<double>(used);
        const double vloss = val_loss_fn(net);
        if (!std::isfinite(vloss))
            throw NumericError("train_refiner: non-finite validation loss");
        if (log) {
            log->train_loss.push_back(train_loss);
            log->val_loss.push_back(vloss);
        }
        if (vloss < best_val) {
            best_val = vloss;
            best = net;
            best_epoch = epoch;
        }
    }
    if (log) log->best_epoch = best_epoch;
    return best;
}

} // namespace csifb
