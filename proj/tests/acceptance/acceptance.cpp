// Acceptance suite: one pass/fail line per criterion.
//
// Criteria 1-4 and 6-8 run in roughly half an hour on one core. The
// full-scale reproduction (criterion 5) takes hours of CPU and only runs
// when CSIFB_ACCEPT_FULL=1 is set; it prints SKIP otherwise.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include "csifb/harness/experiment.hpp"
#include "csifb/nn/checkpoint.hpp"
#include "unit/oracles.hpp"

using namespace csifb;
using namespace csifb::test;

namespace {

// ---------------------------------------------------------------- helpers

struct CriterionResult {
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Mat random_mat(int rows, int cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0, scale);
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

ExperimentConfig scaled_base() {
    ExperimentConfig cfg;
    cfg.sys.N = 32;
    cfg.sys.P = 128;
    cfg.sys.c = 2.0;
    cfg.sys.K = 4;
    cfg.sys.rho = 0.10;
    cfg.sys.seed = 20250807;
    cfg.epochs = 20;
    cfg.lr = 1e-3;
    cfg.batch = 200;
    cfg.alpha1 = 1e-5;
    cfg.alpha2 = 1e-5;
    cfg.beta = 8;
    cfg.det_train = 10000;
    cfg.det_val = 2000;
    cfg.det_test = 2000;
    cfg.rec_train = 8000;
    cfg.rec_val = 2000;
    cfg.rec_test = 2000;
    cfg.stop_errors = 1000;
    cfg.max_frames = 30000;
    cfg.nmse_frames = 2000;
    cfg.report_wall_clock = false;
    return cfg;
}

/// Trained networks for one (rho, c) point of the scaled config, built on
/// demand and reused across criteria.
struct Stack {
    ExperimentConfig cfg;
    ExperimentContext ctx;
    DetectionNetwork det;
    RefinementNetwork rec;
    bool has_rec = false;
};

class StackCache {
public:
    Stack& get(double rho, double c, bool need_rec) {
        const auto key = std::make_pair(rho, c);
        auto it = stacks_.find(key);
        if (it == stacks_.end()) {
            Stack s;
            s.cfg = scaled_base();
            s.cfg.sys.rho = rho;
            s.cfg.sys.c = c;
            s.cfg.validate();
            s.ctx = make_context(s.cfg.sys);
            std::cerr << "  [train] detector rho=" << rho << " c=" << c
                      << " (" << s.cfg.det_train << " samples, "
                      << s.cfg.epochs << " epochs)" << std::endl;
            const auto t0 = std::chrono::steady_clock::now();
            DetectionDataset train =
                build_detection_dataset(s.ctx, s.cfg.det_train, stream::kDetTrain);
            DetectionDataset val =
                build_detection_dataset(s.ctx, s.cfg.det_val, stream::kDetVal);
            DetectorTrainOptions opt;
            opt.epochs = s.cfg.epochs;
            opt.lr = s.cfg.lr;
            opt.batch = s.cfg.batch;
            opt.alpha1 = s.cfg.alpha1;
            TrainLog log;
            Rng rng = make_stream(s.cfg.sys.seed, stream::kDetInit);
            s.det = train_detector(train, val, s.cfg.sys, opt, rng, &log);
            const auto t1 = std::chrono::steady_clock::now();
            std::cerr << "  [train] detector done in "
                      << std::chrono::duration<double>(t1 - t0).count()
                      << " s, val loss " << log.val_loss[log.best_epoch]
                      << " (from " << log.val_loss.front() << ")" << std::endl;
            it = stacks_.emplace(key, std::move(s)).first;
        }
        Stack& s = it->second;
        if (need_rec && !s.has_rec) {
            std::cerr << "  [train] refiner rho=" << rho << " c=" << c
                      << std::endl;
            ReconstructionDataset train = build_reconstruction_dataset(
                s.ctx, s.det, s.cfg.rec_train, stream::kRecTrain, s.cfg.beta);
            ReconstructionDataset val = build_reconstruction_dataset(
                s.ctx, s.det, s.cfg.rec_val, stream::kRecVal, s.cfg.beta);
            RefinerTrainOptions opt;
            opt.epochs = s.cfg.epochs;
            opt.lr = s.cfg.lr;
            opt.batch = s.cfg.batch;
            opt.alpha2 = s.cfg.alpha2;
            RefinerTrainLog log;
            Rng rng = make_stream(s.cfg.sys.seed, stream::kRecInit);
            s.rec = train_refiner(train, val, s.cfg.sys, opt, rng, &log);
            s.has_rec = true;
            std::cerr << "  [train] refiner done, val loss "
                      << log.val_loss[log.best_epoch] << std::endl;
        }
        return s;
    }

private:
    std::map<std::pair<double, double>, Stack> stacks_;
};

ResultRow point(const Stack& s, const std::string& scheme, double snr,
                long stop, long max_frames, long nmse_frames,
                int baseline_beta = 10) {
    ExperimentConfig cfg = s.cfg;
    cfg.stop_errors = stop;
    cfg.max_frames = max_frames;
    cfg.nmse_frames = nmse_frames;
    const auto snr_index = static_cast<std::size_t>(std::llround(snr) + 40);
    const bool proposed = scheme == "proposed";
    return run_point(s.ctx, cfg, scheme, snr_index, snr,
                     proposed ? &s.det : nullptr, proposed ? &s.rec : nullptr,
                     baseline_beta);
}

/// Detection + sca_biht products for n frames at one SNR, cached so
/// several refiners (or the no-refiner ablation) can be scored on the
/// same test set.
struct ReconEval {
    Mat h_tilde;  // 2N x n (zero columns where degenerate)
    Mat h_real;   // 2N x n
    std::vector<bool> degenerate;
};

ReconEval collect_recon(const Stack& s, double snr, int n_frames, int beta) {
    const SystemConfig& sys = s.cfg.sys;
    const auto snr_index = static_cast<std::size_t>(std::llround(snr) + 40);
    ReconEval ev;
    ev.h_tilde = Mat::Zero(2 * sys.N, n_frames);
    ev.h_real.resize(2 * sys.N, n_frames);
    ev.degenerate.assign(n_frames, false);
    const int chunk = 256;
    for (int i0 = 0; i0 < n_frames; i0 += chunk) {
        const int nb = std::min(chunk, n_frames - i0);
        Mat X(2 * sys.P, nb);
        for (int j = 0; j < nb; ++j) {
            Rng rng = make_stream(sys.seed,
                                  stream::eval_frame(snr_index,
                                                     static_cast<std::uint64_t>(i0 + j)));
            FrameSample f = gen_frame(s.ctx, snr, rng);
            X.col(j) = f.xhat.real_form;
            ev.h_real.col(i0 + j) = f.h_real;
        }
        DetectionOutput out = detect_forward(s.det, X, s.ctx.Qhat);
        for (int j = 0; j < nb; ++j) {
            const Bits dec = qpsk_hard_bits(real_to_complex(out.w().col(j)));
            const FeedbackBits fb = disassemble_feedback(dec, sys.M(), sys.N);
            const ScaBihtResult sr = sca_biht(fb.y_real, fb.y_imag, fb.z,
                                              estimate_sparsity(fb.z), s.ctx.Phi,
                                              beta);
            if (sr.degenerate)
                ev.degenerate[i0 + j] = true;
            else
                ev.h_tilde.col(i0 + j) = complex_to_real(sr.h);
        }
    }
    return ev;
}

double nmse_of(const ReconEval& ev, const Mat& h_hat) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < h_hat.cols(); ++j) {
        if (ev.degenerate[static_cast<std::size_t>(j)]) {
            sum += 1.0;
            continue;
        }
        sum += (h_hat.col(j) - ev.h_real.col(j)).squaredNorm() /
               ev.h_real.col(j).squaredNorm();
    }
    return sum / static_cast<double>(h_hat.cols());
}

double nmse_refined(const Stack& s, const ReconEval& ev) {
    return nmse_of(ev, refine(s.rec, ev.h_tilde));
}

double nmse_biht_only(const ReconEval& ev) { return nmse_of(ev, ev.h_tilde); }

// ---------------------------------------------------------------- criteria

CriterionResult criterion_gradients() {
    CriterionResult r;
    r.name = "gradient oracle (layers + full cascade)";

    // Per-layer check on both output activations.
    double layer_worst = 0.0;
    for (nn::OutAct act : {nn::OutAct::Tanh, nn::OutAct::Linear}) {
        Rng rng = make_stream(1, static_cast<std::uint64_t>(act) + 10);
        nn::SubnetParams p = nn::init_subnet(6, 12, 5, act, rng);
        // Non-trivial BN state so every backward term is exercised.
        std::normal_distribution<double> n(0, 0.3);
        for (int i = 0; i < 6; ++i) {
            p.bn_gamma[i] = 1.0 + n(rng);
            p.bn_beta[i] = n(rng);
        }
        Mat X = random_mat(6, 5, rng);
        Mat C = random_mat(5, 5, rng);
        auto loss = [&]() {
            nn::SubnetParams pc = p;
            nn::ForwardCache cache;
            return nn::subnet_forward_train(pc, X, cache).cwiseProduct(C).sum();
        };
        nn::SubnetParams pc = p;
        nn::ForwardCache cache;
        nn::subnet_forward_train(pc, X, cache);
        nn::SubnetGrads g = nn::zero_grads(p);
        Mat dX = nn::subnet_backward(p, cache, C, g);
        auto ps = nn::trainable_tensors(p);
        auto gs = nn::trainable_tensors(g);
        for (std::size_t t = 0; t < ps.size(); ++t)
            for (Eigen::Index i = 0; i < ps[t].size; ++i)
                layer_worst = std::max(
                    layer_worst,
                    rel_err(gs[t].data[i], fd_central(loss, ps[t].data + i)));
        for (Eigen::Index i = 0; i < X.size(); ++i)
            layer_worst = std::max(
                layer_worst, rel_err(dX.data()[i], fd_central(loss, X.data() + i)));
    }

    // Full six-subnet cascade at the tiny config (N=8, P=16, L=6).
    SystemConfig cfg;
    cfg.N = 8;
    cfg.P = 16;
    cfg.c = 0.25;  // M = 2, L = 6
    cfg.K = 2;
    cfg.rho = 0.25;
    cfg.seed = 3;
    const ExperimentContext ctx = make_context(cfg);
    Rng rng = make_stream(2, 0);
    DetectionNetwork net = init_detection_network(cfg, rng);
    Mat X = random_mat(2 * cfg.P, 4, rng);
    Mat D = random_mat(2 * cfg.P, 4, rng, 0.5);
    Mat W = random_mat(2 * cfg.L(), 4, rng, 0.5);
    auto loss = [&]() {
        DetectionNetwork nc = net;
        CascadeCache cache;
        DetectionOutput out = detect_forward_train(nc, X, ctx.Qhat, cache);
        return detection_loss(out, D, W, net, 0.0);
    };
    DetectionNetwork nc = net;
    CascadeCache cache;
    DetectionOutput out = detect_forward_train(nc, X, ctx.Qhat, cache);
    CascadeGrads grads;
    for (int i = 0; i < 3; ++i) {
        grads.csi[i] = nn::zero_grads(net.csi_nets[i]);
        grads.det[i] = nn::zero_grads(net.det_nets[i]);
    }
    detect_backward(net, cache, out, D, W, ctx.Qhat, grads);
    double cascade_worst = 0.0;
    auto check = [&](nn::SubnetParams& p, nn::SubnetGrads& g) {
        auto ps = nn::trainable_tensors(p);
        auto gs = nn::trainable_tensors(g);
        for (std::size_t t = 0; t < ps.size(); ++t)
            for (Eigen::Index i = 0; i < ps[t].size; ++i)
                cascade_worst = std::max(
                    cascade_worst,
                    rel_err(gs[t].data[i], fd_central(loss, ps[t].data + i)));
    };
    for (int i = 0; i < 3; ++i) {
        check(net.csi_nets[i], grads.csi[i]);
        check(net.det_nets[i], grads.det[i]);
    }

    r.pass = layer_worst < 1e-5 && cascade_worst < 1e-4;
    std::ostringstream ss;
    ss << "layer max rel err " << layer_worst << ", cascade " << cascade_worst;
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_exact_invariants() {
    CriterionResult r;
    r.name = "exact algebraic invariants";
    bool ok = true;
    std::ostringstream why;

    // Walsh orthogonality, exact in integer arithmetic.
    for (auto [P, L] : {std::pair{512, 160}, {16, 16}, {8, 3}}) {
        SpreadingMatrix Q = gen_walsh(P, L);
        for (int i = 0; i < L && ok; ++i)
            for (int j = 0; j < L; ++j) {
                long long acc = 0;
                for (int p = 0; p < P; ++p)
                    acc += static_cast<long long>(Q.values(i, p)) *
                           static_cast<long long>(Q.values(j, p));
                if (acc != (i == j ? P : 0)) {
                    ok = false;
                    why << "walsh(" << P << "," << L << ") not orthogonal; ";
                    break;
                }
            }
    }

    // QPSK and complex<->real round trips, bit exact.
    {
        SystemConfig even, odd;
        even.N = 6; even.P = 8; even.c = 0.5; even.K = 2;
        odd.N = 5; odd.P = 8; odd.c = 0.6; odd.K = 2;
        Rng rng = make_stream(4, 0);
        for (int trial = 0; trial < 100 && ok; ++trial) {
            for (const SystemConfig* cfg : {&even, &odd}) {
                Bits yr(cfg->M()), yi(cfg->M()), z(cfg->N);
                for (auto& b : yr) b = rng() % 2;
                for (auto& b : yi) b = rng() % 2;
                for (auto& b : z) b = rng() % 2;
                FeedbackBits p = assemble_feedback(yr, yi, z);
                FeedbackBits q = qpsk_demodulate(qpsk_modulate(p).values, *cfg);
                if (q.y_real != yr || q.y_imag != yi || q.z != z) {
                    ok = false;
                    why << "qpsk round trip failed; ";
                    break;
                }
            }
            CVec v(9);
            std::normal_distribution<double> n(0, 1);
            for (int i = 0; i < 9; ++i) v[i] = cplx(n(rng), n(rng));
            if (real_to_complex(complex_to_real(v)) != v) {
                ok = false;
                why << "complex<->real round trip failed; ";
            }
        }
    }

    // Noiseless ZF within 1e-10 relative error.
    {
        SystemConfig cfg;
        cfg.N = 8; cfg.P = 16; cfg.c = 0.25; cfg.K = 2; cfg.seed = 5;
        const ExperimentContext ctx = make_context(cfg);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            Rng rng = make_stream(6, static_cast<std::uint64_t>(t));
            FrameSample f = gen_frame(ctx, std::nullopt, rng);
            worst = std::max(worst, (f.xhat.values - f.x).norm() / f.x.norm());
        }
        if (worst > 1e-10) {
            ok = false;
            why << "ZF rel err " << worst << "; ";
        }
    }

    // IR oracle identities with perfect inputs.
    {
        SystemConfig cfg;
        cfg.N = 8; cfg.P = 16; cfg.c = 0.25; cfg.K = 2; cfg.rho = 0.3; cfg.seed = 7;
        const ExperimentContext ctx = make_context(cfg);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            Rng rng = make_stream(8, static_cast<std::uint64_t>(t));
            FrameSample f = gen_frame(ctx, std::nullopt, rng);
            Mat d_tilde = csi_ir(f.xhat.real_form, f.w_real, ctx.Qhat, cfg.rho,
                                 cfg.E_u, cfg.L());
            Mat expect_d = std::sqrt((1.0 - cfg.rho) * cfg.E_u) * f.d_real;
            worst = std::max(worst, (d_tilde - expect_d).cwiseAbs().maxCoeff());
            Mat w_tilde = ulus_ir(f.xhat.real_form, f.d_real, cfg.rho, cfg.E_u);
            Mat expect_w = std::sqrt(cfg.rho * cfg.E_u / cfg.L()) *
                           (ctx.Qhat.values.transpose() * f.w_real);
            worst = std::max(worst, (w_tilde - expect_w).cwiseAbs().maxCoeff());
        }
        if (worst > 1e-12) {
            ok = false;
            why << "IR identity residual " << worst << "; ";
        }
    }

    r.pass = ok;
    r.detail = ok ? "walsh exact, round trips exact, ZF <= 1e-10, IR <= 1e-12"
                  : why.str();
    return r;
}

CriterionResult criterion_biht_oracle() {
    CriterionResult r;
    r.name = "sca-biht bit-identical to straight-line oracle (100 instances)";
    SystemConfig cfg;
    cfg.N = 8;
    cfg.P = 64;
    cfg.c = 2.0;  // M = 16
    cfg.K = 2;
    int mismatches = 0;
    for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
        Rng rng = make_stream(seed, 0);
        MeasurementMatrix phi = gen_measurement_matrix(cfg.N, cfg.M(), rng);
        CsiVector h = gen_sparse_csi(cfg, rng);
        auto [yr, yi] = compress_1bit(h, phi);
        Bits z = support_bits(h);
        const int k_hat = estimate_sparsity(z);
        ScaBihtResult lib = sca_biht(yr, yi, z, k_hat, phi, 8);
        bool deg = false;
        CVec oracle = oracle_sca_biht(yr, yi, z, k_hat, phi.values, 8, &deg);
        if (lib.h != oracle || lib.degenerate != deg) ++mismatches;
    }
    r.pass = mismatches == 0;
    std::ostringstream ss;
    ss << mismatches << " of 100 instances differ";
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_scaled_training(StackCache& stacks) {
    CriterionResult r;
    r.name = "scaled training beats the classical receiver";
    Stack& s = stacks.get(0.10, 2.0, true);

    ResultRow prop = point(s, "proposed", 10.0, 1000, 30000, 2000);
    ResultRow base = point(s, "baseline", 10.0, 1000, 30000, 2000);

    ReconEval ev12 = collect_recon(s, 12.0, 2000, s.cfg.beta);
    const double nmse_ref = nmse_refined(s, ev12);
    const double nmse_raw = nmse_biht_only(ev12);

    const bool ber_ok = prop.ber_ulus < base.ber_ulus;
    const bool nmse_ok = nmse_ref < nmse_raw;
    r.pass = ber_ok && nmse_ok;
    std::ostringstream ss;
    ss << "UL-US BER@10dB " << prop.ber_ulus << " vs baseline " << base.ber_ulus
       << (ber_ok ? " (ok)" : " (FAIL)") << "; NMSE@12dB " << nmse_ref
       << " vs biht-only " << nmse_raw << (nmse_ok ? " (ok)" : " (FAIL)");
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_full_config() {
    CriterionResult r;
    r.name = "full-config reproduction (optional)";
    if (!std::getenv("CSIFB_ACCEPT_FULL")) {
        r.skipped = true;
        r.detail = "set CSIFB_ACCEPT_FULL=1 to run (hours of CPU)";
        return r;
    }

    ExperimentConfig cfg;  // paper-scale defaults
    cfg.sys.N = 64;
    cfg.sys.P = 512;
    cfg.sys.c = 2.0;
    cfg.sys.K = 8;
    cfg.sys.rho = 0.10;
    cfg.sys.seed = 20250807;
    cfg.epochs = 50;
    cfg.snr_db = {0, 4, 8, 10, 12, 14};
    cfg.scheme = "both";
    cfg.baseline_beta = {100};
    cfg.stop_errors = 1000;
    cfg.max_frames = 50000;
    cfg.nmse_frames = 5000;
    cfg.report_wall_clock = false;

    const ExperimentContext ctx = make_context(cfg.sys);
    std::cerr << "  [full] training detector (60k samples, 50 epochs)"
              << std::endl;
    DetectionDataset dtrain =
        build_detection_dataset(ctx, cfg.det_train, stream::kDetTrain);
    DetectionDataset dval =
        build_detection_dataset(ctx, cfg.det_val, stream::kDetVal);
    DetectorTrainOptions dopt;
    dopt.epochs = cfg.epochs;
    dopt.lr = cfg.lr;
    dopt.batch = cfg.batch;
    dopt.alpha1 = cfg.alpha1;
    Rng drng = make_stream(cfg.sys.seed, stream::kDetInit);
    TrainLog dlog;
    DetectionNetwork det = train_detector(dtrain, dval, cfg.sys, dopt, drng, &dlog);
    std::cerr << "  [full] training refiner (45k samples)" << std::endl;
    ReconstructionDataset rtrain = build_reconstruction_dataset(
        ctx, det, cfg.rec_train, stream::kRecTrain, cfg.beta);
    ReconstructionDataset rval = build_reconstruction_dataset(
        ctx, det, cfg.rec_val, stream::kRecVal, cfg.beta);
    RefinerTrainOptions ropt;
    ropt.epochs = cfg.epochs;
    ropt.lr = cfg.lr;
    ropt.batch = cfg.batch;
    ropt.alpha2 = cfg.alpha2;
    Rng rrng = make_stream(cfg.sys.seed, stream::kRecInit);
    RefinerTrainLog rlog;
    RefinementNetwork rec = train_refiner(rtrain, rval, cfg.sys, ropt, rrng, &rlog);

    std::cerr << "  [full] evaluating" << std::endl;
    const auto rows = run_experiment(cfg, &det, &rec);
    auto find = [&rows](const std::string& scheme, double snr) -> const ResultRow& {
        for (const auto& row : rows)
            if (row.scheme == scheme && row.snr_db == snr) return row;
        throw std::logic_error("row not found");
    };
    const double ber_u = find("proposed", 10).ber_ulus;
    const double ber_m = find("proposed", 10).ber_mfv;
    const double nmse12 = find("proposed", 12).nmse;
    const bool a = ber_u >= 1e-3 && ber_u <= 1e-2;
    const bool b = ber_m >= 2e-2 && ber_m <= 9e-2;
    const bool c = nmse12 >= 0.06 && nmse12 <= 0.13;
    bool order = true;
    for (double snr : cfg.snr_db)
        if (snr <= 14.0 &&
            find("proposed", snr).nmse >= find("baseline-b100", snr).nmse)
            order = false;

    r.pass = a && b && c && order;
    std::ostringstream ss;
    ss << "UL-US@10 " << ber_u << (a ? "" : " OUT") << ", MFV@10 " << ber_m
       << (b ? "" : " OUT") << ", NMSE@12 " << nmse12 << (c ? "" : " OUT")
       << ", ordering<=14dB " << (order ? "holds" : "VIOLATED");
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_alpha2_sweep(StackCache& stacks) {
    CriterionResult r;
    r.name = "alpha2 sweep: 1e-5 within 2% of the grid minimum";
    Stack& s = stacks.get(0.10, 2.0, true);

    // One shared dataset; one refiner per alpha2.
    ReconstructionDataset rtrain = build_reconstruction_dataset(
        s.ctx, s.det, s.cfg.rec_train, stream::kRecTrain, s.cfg.beta);
    ReconstructionDataset rval = build_reconstruction_dataset(
        s.ctx, s.det, s.cfg.rec_val, stream::kRecVal, s.cfg.beta);
    const std::vector<double> grid = {1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
    std::vector<RefinementNetwork> nets;
    for (double alpha2 : grid) {
        RefinerTrainOptions opt;
        opt.epochs = s.cfg.epochs;
        opt.lr = s.cfg.lr;
        opt.batch = s.cfg.batch;
        opt.alpha2 = alpha2;
        Rng rng = make_stream(s.cfg.sys.seed, stream::kRecInit);
        nets.push_back(train_refiner(rtrain, rval, s.cfg.sys, opt, rng, nullptr));
        std::cerr << "  [sweep] trained refiner alpha2=" << alpha2 << std::endl;
    }

    const std::vector<double> snrs = {8.0, 12.0, 16.0};
    bool ok = true;
    std::ostringstream ss;
    for (double snr : snrs) {
        ReconEval ev = collect_recon(s, snr, 2000, s.cfg.beta);
        std::vector<double> nmse;
        for (const auto& net : nets)
            nmse.push_back(nmse_of(ev, refine(net, ev.h_tilde)));
        const double best = *std::min_element(nmse.begin(), nmse.end());
        const double at_1e5 = nmse[1];
        const bool good = at_1e5 <= 1.02 * best;
        ok = ok && good;
        ss << snr << "dB: 1e-5 -> " << at_1e5 << " vs min " << best
           << (good ? " (ok); " : " (FAIL); ");
    }
    r.pass = ok;
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_trends(StackCache& stacks) {
    CriterionResult r;
    r.name = "trend suite (rho/c on BER, rho/c on NMSE)";
    std::ostringstream ss;
    bool all_ok = true;
    const std::vector<double> ber_snrs = {8.0, 10.0, 12.0};

    // rho tradeoff on the proposed detector (higher rho: UL-US worse,
    // MFV better).
    {
        Stack& lo = stacks.get(0.05, 2.0, true);
        Stack& hi = stacks.get(0.15, 2.0, true);
        int ulus_votes = 0, mfv_votes = 0;
        for (double snr : ber_snrs) {
            ResultRow a = point(lo, "proposed", snr, 1000, 30000, 1);
            ResultRow b = point(hi, "proposed", snr, 1000, 30000, 1);
            ulus_votes += (b.ber_ulus > a.ber_ulus);
            mfv_votes += (b.ber_mfv < a.ber_mfv);
        }
        const bool ok = ulus_votes >= 2 && mfv_votes >= 2;
        all_ok = all_ok && ok;
        ss << "rho-BER " << ulus_votes << "/" << mfv_votes << " of 3"
           << (ok ? " (ok); " : " (FAIL); ");
    }

    // c degradation on both BERs (larger c: less spreading gain).
    {
        Stack& lo = stacks.get(0.10, 2.0, true);
        Stack& hi = stacks.get(0.10, 3.0, true);
        int ulus_votes = 0, mfv_votes = 0;
        for (double snr : ber_snrs) {
            ResultRow a = point(lo, "proposed", snr, 1000, 30000, 1);
            ResultRow b = point(hi, "proposed", snr, 1000, 30000, 1);
            ulus_votes += (b.ber_ulus > a.ber_ulus);
            mfv_votes += (b.ber_mfv > a.ber_mfv);
        }
        const bool ok = ulus_votes >= 2 && mfv_votes >= 2;
        all_ok = all_ok && ok;
        ss << "c-BER " << ulus_votes << "/" << mfv_votes << " of 3"
           << (ok ? " (ok); " : " (FAIL); ");
    }

    // Baseline NMSE improves with rho at high SNR (beta = 10).
    {
        Stack& lo = stacks.get(0.05, 2.0, true);
        Stack& hi = stacks.get(0.15, 2.0, true);
        int votes = 0;
        for (double snr : {10.0, 12.0, 14.0}) {
            ResultRow a = point(lo, "baseline", snr, 1, 30000, 3000, 10);
            ResultRow b = point(hi, "baseline", snr, 1, 30000, 3000, 10);
            votes += (b.nmse < a.nmse);
        }
        const bool ok = votes >= 2;
        all_ok = all_ok && ok;
        ss << "rho-NMSE(base) " << votes << "/3" << (ok ? " (ok); " : " (FAIL); ");
    }

    // Proposed NMSE crossover in c: worse at low SNR, better converged.
    {
        Stack& lo = stacks.get(0.10, 2.0, true);
        Stack& hi = stacks.get(0.10, 3.0, true);
        int low_votes = 0, high_votes = 0;
        for (double snr : {0.0, 2.0, 4.0}) {
            const double a = nmse_refined(lo, collect_recon(lo, snr, 3000, 8));
            const double b = nmse_refined(hi, collect_recon(hi, snr, 3000, 8));
            low_votes += (b > a);
        }
        for (double snr : {14.0, 16.0, 18.0}) {
            const double a = nmse_refined(lo, collect_recon(lo, snr, 3000, 8));
            const double b = nmse_refined(hi, collect_recon(hi, snr, 3000, 8));
            high_votes += (b < a);
        }
        const bool ok = low_votes >= 2 && high_votes >= 2;
        all_ok = all_ok && ok;
        ss << "c-NMSE crossover " << low_votes << "/" << high_votes << " of 3"
           << (ok ? " (ok)" : " (FAIL)");
    }

    r.pass = all_ok;
    r.detail = ss.str();
    return r;
}

CriterionResult criterion_timing(StackCache& stacks) {
    CriterionResult r;
    r.name = "reconstruction timing: proposed < baseline(beta=100)";
    bool ok = true;
    std::ostringstream ss;
    for (double c : {2.0, 2.5, 3.0}) {
        Stack& s = stacks.get(0.10, c, true);
        const SystemConfig& sys = s.cfg.sys;
        const int n = 800;
        // Representative inputs: true feedback bits of noise-free frames.
        std::vector<FeedbackBits> inputs;
        Mat h_tilde(2 * sys.N, 1);
        inputs.reserve(n);
        for (int i = 0; i < n; ++i) {
            Rng rng = make_stream(sys.seed, stream::eval_frame(39, i));
            inputs.push_back(gen_frame(s.ctx, std::nullopt, rng).p);
        }
        const auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < n; ++i) {
            const auto& p = inputs[i];
            ScaBihtResult sr = sca_biht(p.y_real, p.y_imag, p.z,
                                        estimate_sparsity(p.z), s.ctx.Phi, 8);
            h_tilde.col(0) = complex_to_real(sr.h);
            volatile double sink = refine(s.rec, h_tilde).sum();
            (void)sink;
        }
        const auto t1 = std::chrono::steady_clock::now();
        for (int i = 0; i < n; ++i) {
            const auto& p = inputs[i];
            ScaBihtResult sr = sca_biht(p.y_real, p.y_imag, p.z,
                                        estimate_sparsity(p.z), s.ctx.Phi, 100);
            volatile double sink = sr.h.sum().real();
            (void)sink;
        }
        const auto t2 = std::chrono::steady_clock::now();
        const double t_prop = std::chrono::duration<double>(t1 - t0).count();
        const double t_base = std::chrono::duration<double>(t2 - t1).count();
        ok = ok && t_prop < t_base;
        ss << "c=" << c << ": " << t_prop << "s vs " << t_base << "s"
           << (t_prop < t_base ? " (ok); " : " (FAIL); ");
    }
    r.pass = ok;
    r.detail = ss.str();
    return r;
}

} // namespace

int main() {
    std::vector<CriterionResult> results;
    StackCache stacks;
    const auto suite_t0 = std::chrono::steady_clock::now();

    auto run = [&results](int idx, auto&& fn) {
        CriterionResult r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r.name = "criterion " + std::to_string(idx);
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        const char* verdict = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
        std::cout << "[" << idx << "/8] " << r.name << " ... " << verdict
                  << " — " << r.detail << std::endl;
        results.push_back(r);
    };

    run(1, [] { return criterion_gradients(); });
    run(2, [] { return criterion_exact_invariants(); });
    run(3, [] { return criterion_biht_oracle(); });
    run(4, [&] { return criterion_scaled_training(stacks); });
    run(5, [] { return criterion_full_config(); });
    run(6, [&] { return criterion_alpha2_sweep(stacks); });
    run(7, [&] { return criterion_trends(stacks); });
    run(8, [&] { return criterion_timing(stacks); });

    int failed = 0, passed = 0, skipped = 0;
    for (const auto& r : results) {
        if (r.skipped) ++skipped;
        else if (r.pass) ++passed;
        else ++failed;
    }
    const auto suite_t1 = std::chrono::steady_clock::now();
    std::cout << "RESULT: " << (failed == 0 ? "PASS" : "FAIL") << " (" << passed
              << " pass, " << failed << " fail, " << skipped << " skip) in "
              << std::chrono::duration<double>(suite_t1 - suite_t0).count()
              << " s" << std::endl;
    return failed;
}
