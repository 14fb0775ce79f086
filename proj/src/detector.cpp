#include "csifb/detector.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace csifb {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

double csi_ir_coeff(double rho, double E_u, int L) {
    return std::sqrt(rho * E_u / static_cast<double>(L));
}

double ulus_ir_coeff(double rho, double E_u) {
    return std::sqrt((1.0 - rho) * E_u);
}

// Hard QPSK decision per rail. Scale-invariant; 0 slices negative, matching
// the hard_bits convention.
Mat slice_qpsk(const Mat& soft) {
    return soft.unaryExpr(
        [](double v) { return v > 0.0 ? kInvSqrt2 : -kInvSqrt2; });
}

std::vector<nn::TensorRef> all_trainable(DetectionNetwork& net) {
    std::vector<nn::TensorRef> refs;
    for (int i = 0; i < 3; ++i) {
        for (auto& t : nn::trainable_tensors(net.csi_nets[i])) refs.push_back(t);
        for (auto& t : nn::trainable_tensors(net.det_nets[i])) refs.push_back(t);
    }
    return refs;
}

std::vector<nn::TensorRef> all_trainable(CascadeGrads& g) {
    std::vector<nn::TensorRef> refs;
    for (int i = 0; i < 3; ++i) {
        for (auto& t : nn::trainable_tensors(g.csi[i])) refs.push_back(t);
        for (auto& t : nn::trainable_tensors(g.det[i])) refs.push_back(t);
    }
    return refs;
}

std::vector<nn::TensorRef> all_l2(DetectionNetwork& net) {
    std::vector<nn::TensorRef> refs;
    for (int i = 0; i < 3; ++i) {
        for (auto& t : nn::l2_tensors(net.csi_nets[i])) refs.push_back(t);
        for (auto& t : nn::l2_tensors(net.det_nets[i])) refs.push_back(t);
    }
    return refs;
}

std::vector<nn::TensorRef> all_l2(CascadeGrads& g) {
    std::vector<nn::TensorRef> refs;
    for (int i = 0; i < 3; ++i) {
        for (auto& t : nn::l2_tensors(g.csi[i])) refs.push_back(t);
        for (auto& t : nn::l2_tensors(g.det[i])) refs.push_back(t);
    }
    return refs;
}

double theta1_norm_sq(const DetectionNetwork& net) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        s += nn::l2_norm_sq(net.csi_nets[i]) + nn::l2_norm_sq(net.det_nets[i]);
    return s;
}

void check_cascade_input(const DetectionNetwork& net, const Mat& xhat_real,
                         const RealSpreadingMatrix& Qhat) {
    if (!net.initialized())
        throw std::logic_error("detection network is uninitialized");
    require(xhat_real.rows() == 2 * net.P, "detect: input rows != 2P");
    require(Qhat.L == net.L && Qhat.P == net.P,
            "detect: spreading matrix does not match network dims");
}

} // namespace

DetectionNetwork init_detection_network(const SystemConfig& cfg, Rng& rng,
                                        double lrelu_slope) {
    cfg.validate();
    DetectionNetwork net;
    net.L = cfg.L();
    net.P = cfg.P;
    net.rho = cfg.rho;
    net.E_u = cfg.E_u;
    for (int i = 0; i < 3; ++i) {
        net.csi_nets[i] = nn::init_subnet(2 * net.L, 4 * net.L, 2 * net.L,
                                          nn::OutAct::Tanh, rng, lrelu_slope);
        net.det_nets[i] = nn::init_subnet(2 * net.P, 4 * net.P, 2 * net.P,
                                          nn::OutAct::Tanh, rng, lrelu_slope);
    }
    return net;
}

Mat csi_ir(const Mat& xhat_real, const Mat& w_hat,
           const RealSpreadingMatrix& Qhat, double rho, double E_u, int L) {
    require(xhat_real.rows() == Qhat.values.cols(), "csi_ir: x rows != 2P");
    require(w_hat.rows() == Qhat.values.rows(), "csi_ir: w rows != 2L");
    require(w_hat.cols() == xhat_real.cols(), "csi_ir: batch mismatch");
    return xhat_real -
           csi_ir_coeff(rho, E_u, L) * (Qhat.values.transpose() * w_hat);
}

Mat ulus_ir(const Mat& xhat_real, const Mat& d_hat, double rho, double E_u) {
    require(d_hat.rows() == xhat_real.rows() && d_hat.cols() == xhat_real.cols(),
            "ulus_ir: shape mismatch");
    return xhat_real - ulus_ir_coeff(rho, E_u) * d_hat;
}

DetectionOutput detect_forward(const DetectionNetwork& net, const Mat& xhat_real,
                               const RealSpreadingMatrix& Qhat) {
    check_cascade_input(net, xhat_real, Qhat);
    const double cw = csi_ir_coeff(net.rho, net.E_u, net.L);
    const double cd = ulus_ir_coeff(net.rho, net.E_u);
    const Mat Qt = Qhat.values.transpose();
    DetectionOutput out;
    Mat w_tilde = xhat_real;
    for (int i = 0; i < 3; ++i) {
        out.w_hat[i] = nn::subnet_infer(net.csi_nets[i],
                                        nn::per_sample_product(Qhat.values, w_tilde));
        Mat d_tilde = xhat_real - cw * nn::per_sample_product(Qt, out.w_hat[i]);
        out.d_hat[i] = nn::subnet_infer(net.det_nets[i], d_tilde);
        if (i < 2) w_tilde = xhat_real - cd * out.d_hat[i];
    }
    return out;
}

DetectionOutput detect_forward_train(DetectionNetwork& net, const Mat& xhat_real,
                                     const RealSpreadingMatrix& Qhat,
                                     CascadeCache& cache) {
    check_cascade_input(net, xhat_real, Qhat);
    DetectionOutput out;
    Mat w_tilde = xhat_real;
    for (int i = 0; i < 3; ++i) {
        out.w_hat[i] = nn::subnet_forward_train(
            net.csi_nets[i], despread(w_tilde, Qhat), cache.csi[i]);
        Mat d_tilde = csi_ir(xhat_real, out.w_hat[i], Qhat, net.rho, net.E_u, net.L);
        out.d_hat[i] = nn::subnet_forward_train(net.det_nets[i], d_tilde,
                                                cache.det[i]);
        if (i < 2) w_tilde = ulus_ir(xhat_real, out.d_hat[i], net.rho, net.E_u);
    }
    return out;
}

double detection_loss(const DetectionOutput& out, const Mat& d_real,
                      const Mat& w_real, const DetectionNetwork& net,
                      double alpha1) {
    const double B = static_cast<double>(d_real.cols());
    double data = 0.0;
    for (int i = 0; i < 3; ++i) {
        require(out.d_hat[i].rows() == d_real.rows() &&
                    out.w_hat[i].rows() == w_real.rows() &&
                    out.d_hat[i].cols() == d_real.cols(),
                "detection_loss: shape mismatch");
        data += (out.d_hat[i] - d_real).squaredNorm();
        data += (out.w_hat[i] - w_real).squaredNorm();
    }
    return data / (6.0 * B) + alpha1 * theta1_norm_sq(net);
}

void detect_backward(const DetectionNetwork& net, const CascadeCache& cache,
                     const DetectionOutput& out, const Mat& d_real,
                     const Mat& w_real, const RealSpreadingMatrix& Qhat,
                     CascadeGrads& grads) {
    const double B = static_cast<double>(d_real.cols());
    const double head = 1.0 / (3.0 * B);  // d/dy of ||y - t||^2 / (6 B)
    const double cw = csi_ir_coeff(net.rho, net.E_u, net.L);
    const double cd = ulus_ir_coeff(net.rho, net.E_u);

    Mat d_wtilde_next;  // gradient wrt w_tilde^(i+1)
    for (int i = 2; i >= 0; --i) {
        Mat dd = head * (out.d_hat[i] - d_real);
        if (i < 2) dd.noalias() -= cd * d_wtilde_next;
        Mat d_dtilde = nn::subnet_backward(net.det_nets[i], cache.det[i], dd,
                                           grads.det[i]);
        Mat dw = head * (out.w_hat[i] - w_real);
        dw.noalias() -= cw * (Qhat.values * d_dtilde);
        Mat du = nn::subnet_backward(net.csi_nets[i], cache.csi[i], dw,
                                     grads.csi[i]);
        if (i > 0) d_wtilde_next = Qhat.values.transpose() * du;
    }
}

DetectionNetwork train_detector(const DetectionDataset& train,
                                const DetectionDataset& val,
                                const SystemConfig& cfg,
                                const DetectorTrainOptions& opt, Rng& rng,
                                TrainLog* log) {
    require(train.size() > 0, "train_detector: empty training set");
    require(val.size() > 0, "train_detector: empty validation set");
    require(opt.batch >= 2, "train_detector: batch must be >= 2");
    const RealSpreadingMatrix Qhat = real_block(gen_walsh(cfg.P, cfg.L()));
    require(train.x.rows() == 2 * cfg.P && train.w.rows() == 2 * cfg.L(),
            "train_detector: dataset dims do not match config");

    DetectionNetwork net = init_detection_network(cfg, rng, opt.lrelu_slope);
    auto params = all_trainable(net);
    nn::AdamState adam = nn::adam_init(params, opt.lr);

    auto val_loss_fn = [&](const DetectionNetwork& n) {
        double data = 0.0;
        const Eigen::Index chunk = 512;
        for (Eigen::Index c0 = 0; c0 < val.size(); c0 += chunk) {
            const Eigen::Index c = std::min(chunk, val.size() - c0);
            DetectionOutput out =
                detect_forward(n, val.x.middleCols(c0, c), Qhat);
            for (int i = 0; i < 3; ++i) {
                data += (out.d_hat[i] - val.d.middleCols(c0, c)).squaredNorm();
                data += (out.w_hat[i] - val.w.middleCols(c0, c)).squaredNorm();
            }
        }
        return data / (6.0 * static_cast<double>(val.size())) +
               opt.alpha1 * theta1_norm_sq(n);
    };

    std::vector<Eigen::Index> perm(train.size());
    std::iota(perm.begin(), perm.end(), 0);
    DetectionNetwork best = net;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        double epoch_loss = 0.0;
        Eigen::Index used = 0;
        for (Eigen::Index b0 = 0; b0 < train.size(); b0 += opt.batch) {
            const Eigen::Index bsz = std::min<Eigen::Index>(opt.batch,
                                                            train.size() - b0);
            if (bsz < 2) break;  // BN needs at least two samples
            Mat Xb(train.x.rows(), bsz), Db(train.d.rows(), bsz),
                Wb(train.w.rows(), bsz);
            for (Eigen::Index j = 0; j < bsz; ++j) {
                Xb.col(j) = train.x.col(perm[b0 + j]);
                Db.col(j) = train.d.col(perm[b0 + j]);
                Wb.col(j) = train.w.col(perm[b0 + j]);
            }
            CascadeCache cache;
            DetectionOutput out = detect_forward_train(net, Xb, Qhat, cache);
            CascadeGrads grads;
            for (int i = 0; i < 3; ++i) {
                grads.csi[i] = nn::zero_grads(net.csi_nets[i]);
                grads.det[i] = nn::zero_grads(net.det_nets[i]);
            }
            detect_backward(net, cache, out, Db, Wb, Qhat, grads);
            const double batch_loss =
                detection_loss(out, Db, Wb, net, 0.0) +
                nn::l2_penalty(all_l2(net), opt.alpha1, all_l2(grads));
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "train_detector: non-finite loss at epoch " << epoch
                    << ", sample offset " << b0;
                throw NumericError(msg.str());
            }
            epoch_loss += batch_loss * static_cast<double>(bsz);
            used += bsz;
            nn::adam_step(params, all_trainable(grads), adam);
        }
        const double train_loss = epoch_loss / static_cast<double>(used);
        const double vloss = val_loss_fn(net);
        if (!std::isfinite(vloss))
            throw NumericError("train_detector: non-finite validation loss");
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

Bits hard_bits(const Vec& rails) {
    Bits out(static_cast<std::size_t>(rails.size()));
    for (Eigen::Index i = 0; i < rails.size(); ++i)
        out[i] = rails[i] > 0.0 ? 0 : 1;
    return out;
}

BaselineOutput baseline_detect(const Mat& xhat_real, const SystemConfig& cfg,
                               const RealSpreadingMatrix& Qhat, int iters) {
    require(iters >= 1, "baseline_detect: iters must be >= 1");
    require(xhat_real.rows() == 2 * cfg.P, "baseline_detect: rows != 2P");
    require(Qhat.P == cfg.P && Qhat.L == cfg.L(),
            "baseline_detect: spreading matrix mismatch");
    const double cw = csi_ir_coeff(cfg.rho, cfg.E_u, cfg.L());
    const double cd = ulus_ir_coeff(cfg.rho, cfg.E_u);

    BaselineOutput out;
    // Hard decisions are scale-invariant, so the nominal soft scales
    // 1/(cw*P) and 1/cd are never applied; this also keeps the rho = 0
    // and rho = 1 boundaries free of divisions by zero (the vanishing
    // interference subtraction drops out through its coefficient).
    Mat w_tilde = xhat_real;
    for (int it = 0; it < iters; ++it) {
        out.w_hat = slice_qpsk(Qhat.values * w_tilde);
        Mat d_tilde = xhat_real - cw * (Qhat.values.transpose() * out.w_hat);
        out.d_hat = slice_qpsk(d_tilde);
        w_tilde = xhat_real - cd * out.d_hat;
    }
    return out;
}

} // namespace csifb
