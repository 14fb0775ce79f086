#include "csifb/harness/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace csifb {

namespace {

constexpr Eigen::Index kChunk = 256;  // frames per batched inference call

long count_bit_errors(const Bits& a, const Bits& b, std::size_t n) {
    long e = 0;
    for (std::size_t i = 0; i < n; ++i) e += (a[i] != b[i]);
    return e;
}

} // namespace

ExperimentContext make_context(const SystemConfig& cfg) {
    cfg.validate();
    ExperimentContext ctx;
    ctx.sys = cfg;
    Rng rng = make_stream(cfg.seed, stream::kMeasurement);
    ctx.Phi = gen_measurement_matrix(cfg.N, cfg.M(), rng);
    ctx.Phi.seed = cfg.seed;
    ctx.Q = gen_walsh(cfg.P, cfg.L());
    ctx.Qhat = real_block(ctx.Q);
    return ctx;
}

FrameSample gen_frame(const ExperimentContext& ctx, std::optional<double> snr_db,
                      Rng& rng, bool keep_received) {
    const SystemConfig& cfg = ctx.sys;
    FrameSample f;
    f.noise_free = !snr_db.has_value();
    // Draw order is part of the determinism contract: h, d bits, g, noise.
    f.h = gen_sparse_csi(cfg, rng);
    f.d_bits = gen_ulus_bits(cfg, rng);
    f.g = gen_uplink_channel(cfg, rng);

    auto [y_real, y_imag] = compress_1bit(f.h, ctx.Phi);
    f.p = assemble_feedback(std::move(y_real), std::move(y_imag),
                            support_bits(f.h));
    f.w = qpsk_modulate(f.p);
    const CVec s = spread(f.w.values, ctx.Q);
    f.d_sym = qpsk_modulate(f.d_bits);
    f.x = superimpose(s, f.d_sym, cfg.rho, cfg.E_u);

    const double sigma2 = f.noise_free ? 0.0 : snr_to_variance(*snr_db, cfg.E_u);
    NoiseMatrix noise = gen_noise(cfg, sigma2, rng);
    CMat R = apply_uplink_channel(f.g, f.x, noise);
    f.xhat = zf_equalize(f.g, R);
    if (keep_received) f.R = std::move(R);

    f.d_real = complex_to_real(f.d_sym);
    f.w_real = complex_to_real(f.w.values);
    f.h_real = complex_to_real(f.h.values);
    return f;
}

BerResult eval_ber(const std::function<std::pair<Bits, Bits>(long)>& frame_bits,
                   long stop_errors, long max_frames) {
    require(stop_errors >= 1 && max_frames >= 1, "eval_ber: bad stop rule");
    BerResult r;
    while (r.frames_used < max_frames && r.errors < stop_errors) {
        auto [dec, truth] = frame_bits(r.frames_used);
        require(dec.size() == truth.size() && !dec.empty(),
                "eval_ber: decision/truth length mismatch");
        r.errors += count_bit_errors(dec, truth, dec.size());
        r.bits += static_cast<long>(dec.size());
        r.frames_used += 1;
    }
    if (r.bits == 0) throw DataError("eval_ber: zero bits processed");
    r.hit_cap = r.errors < stop_errors;
    r.ber = static_cast<double>(r.errors) / static_cast<double>(r.bits);
    return r;
}

double eval_nmse(const Mat& h_hat, const Mat& h_real, long* skipped) {
    require(h_hat.rows() == h_real.rows() && h_hat.cols() == h_real.cols(),
            "eval_nmse: shape mismatch");
    double sum = 0.0;
    long used = 0, skip = 0;
    for (Eigen::Index j = 0; j < h_hat.cols(); ++j) {
        const double denom = h_real.col(j).squaredNorm();
        if (denom == 0.0) {
            ++skip;
            continue;
        }
        sum += (h_hat.col(j) - h_real.col(j)).squaredNorm() / denom;
        ++used;
    }
    if (skipped) *skipped = skip;
    require(used > 0, "eval_nmse: every label had zero norm");
    return sum / static_cast<double>(used);
}

ResultRow run_point(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                    const std::string& scheme, std::size_t snr_index,
                    double snr_db, const DetectionNetwork* det,
                    const RefinementNetwork* rec, int baseline_recon_beta) {
    const SystemConfig& sys = ctx.sys;
    const bool proposed = scheme == "proposed";
    if (proposed) {
        if (!det || !rec)
            throw DataError("run_point: proposed scheme needs both networks");
    }
    const auto t0 = std::chrono::steady_clock::now();

    const std::size_t ulus_bits_per_frame = 2 * static_cast<std::size_t>(sys.P);
    const std::size_t mfv_bits_per_frame =
        static_cast<std::size_t>(sys.feedback_len());
    const long nmse_target = std::min(cfg.nmse_frames, cfg.max_frames);

    long err_u = 0, bits_u = 0, err_m = 0, bits_m = 0;
    long frames = 0;
    double nmse_sum = 0.0;
    long nmse_n = 0;

    auto done = [&] {
        return err_u >= cfg.stop_errors && err_m >= cfg.stop_errors &&
               nmse_n >= nmse_target;
    };

    while (frames < cfg.max_frames && !done()) {
        const Eigen::Index chunk =
            std::min<Eigen::Index>(kChunk, cfg.max_frames - frames);
        Mat X(2 * sys.P, chunk);
        std::vector<Bits> truth_d(chunk), truth_p(chunk);
        Mat h_real(2 * sys.N, chunk);
        for (Eigen::Index j = 0; j < chunk; ++j) {
            Rng rng = make_stream(
                sys.seed, stream::eval_frame(snr_index,
                                             static_cast<std::uint64_t>(frames + j)));
            FrameSample f = gen_frame(ctx, snr_db, rng);
            X.col(j) = f.xhat.real_form;
            truth_d[j] = hard_bits(f.d_real);
            truth_p[j] = f.p.concat();
            h_real.col(j) = f.h_real;
        }

        Mat d_hat, w_hat;
        if (proposed) {
            DetectionOutput out = detect_forward(*det, X, ctx.Qhat);
            d_hat = out.d();
            w_hat = out.w();
        } else {
            BaselineOutput out =
                baseline_detect(X, sys, ctx.Qhat, cfg.baseline_iters);
            d_hat = out.d_hat;
            w_hat = out.w_hat;
        }

        std::vector<Eigen::Index> recon_cols;
        Mat h_tilde(2 * sys.N, chunk);
        for (Eigen::Index j = 0; j < chunk; ++j) {
            const Bits dec_d = hard_bits(d_hat.col(j));
            err_u += count_bit_errors(dec_d, truth_d[j], ulus_bits_per_frame);
            bits_u += static_cast<long>(ulus_bits_per_frame);

            const Bits dec_p = qpsk_hard_bits(real_to_complex(w_hat.col(j)));
            err_m += count_bit_errors(dec_p, truth_p[j], mfv_bits_per_frame);
            bits_m += static_cast<long>(mfv_bits_per_frame);

            if (nmse_n < nmse_target) {
                const FeedbackBits fb =
                    disassemble_feedback(dec_p, sys.M(), sys.N);
                const int k_hat = estimate_sparsity(fb.z);
                const int beta = proposed ? cfg.beta : baseline_recon_beta;
                const ScaBihtResult sr =
                    sca_biht(fb.y_real, fb.y_imag, fb.z, k_hat, ctx.Phi, beta);
                if (sr.degenerate) {
                    nmse_sum += 1.0;  // scored as NMSE = 1 by convention
                    ++nmse_n;
                } else if (proposed) {
                    h_tilde.col(static_cast<Eigen::Index>(recon_cols.size())) =
                        complex_to_real(sr.h);
                    recon_cols.push_back(j);
                } else {
                    const Vec h_hat = complex_to_real(sr.h);
                    const double denom = h_real.col(j).squaredNorm();
                    if (denom > 0.0) {
                        nmse_sum += (h_hat - h_real.col(j)).squaredNorm() / denom;
                        ++nmse_n;
                    }
                }
            }
        }
        if (proposed && !recon_cols.empty()) {
            const auto nb = static_cast<Eigen::Index>(recon_cols.size());
            const Mat h_hat = refine(*rec, h_tilde.leftCols(nb));
            for (Eigen::Index k = 0; k < nb; ++k) {
                const double denom = h_real.col(recon_cols[k]).squaredNorm();
                if (denom > 0.0) {
                    nmse_sum +=
                        (h_hat.col(k) - h_real.col(recon_cols[k])).squaredNorm() /
                        denom;
                    ++nmse_n;
                }
            }
        }
        frames += chunk;
    }

    const auto t1 = std::chrono::steady_clock::now();
    ResultRow row;
    row.scheme = scheme;
    row.snr_db = snr_db;
    row.ber_ulus = static_cast<double>(err_u) / static_cast<double>(bits_u);
    row.ber_mfv = static_cast<double>(err_m) / static_cast<double>(bits_m);
    row.nmse = nmse_n > 0 ? nmse_sum / static_cast<double>(nmse_n) : 0.0;
    row.frames_used = frames;
    row.bit_errors_observed = err_u + err_m;
    row.wall_clock_s =
        cfg.report_wall_clock
            ? std::chrono::duration<double>(t1 - t0).count()
            : 0.0;
    return row;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg,
                                      const DetectionNetwork* det,
                                      const RefinementNetwork* rec) {
    cfg.validate();
    const bool want_proposed = cfg.scheme == "proposed" || cfg.scheme == "both";
    const bool want_baseline = cfg.scheme == "baseline" || cfg.scheme == "both";
    if (want_proposed) {
        if (!det || !rec)
            throw DataError("run_experiment: proposed scheme requested but "
                            "networks are missing");
        if (det->L != cfg.sys.L() || det->P != cfg.sys.P ||
            det->rho != cfg.sys.rho || det->E_u != cfg.sys.E_u)
            throw DataError("run_experiment: detection network does not match "
                            "the config");
        if (rec->N != cfg.sys.N)
            throw DataError("run_experiment: refinement network does not match "
                            "the config");
    }
    const ExperimentContext ctx = make_context(cfg.sys);

    std::vector<ResultRow> rows;
    if (want_proposed) {
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
            rows.push_back(run_point(ctx, cfg, "proposed", si, cfg.snr_db[si],
                                     det, rec, 0));
    }
    if (want_baseline) {
        for (int beta : cfg.baseline_beta) {
            const std::string scheme = "baseline-b" + std::to_string(beta);
            for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
                rows.push_back(run_point(ctx, cfg, scheme, si, cfg.snr_db[si],
                                         nullptr, nullptr, beta));
        }
    }
    return rows;
}

void write_results_csv(const std::string& path,
                       const std::vector<ResultRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open results file for writing: " + path);
    f << "# csifb-results v1\n";
    f << "scheme,snr_db,ber_ulus,ber_mfv,nmse,frames_used,"
         "bit_errors_observed,wall_clock_s\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%ld,%ld,%.10g\n",
                      r.scheme.c_str(), r.snr_db, r.ber_ulus, r.ber_mfv, r.nmse,
                      r.frames_used, r.bit_errors_observed, r.wall_clock_s);
        f << buf;
    }
    if (!f) throw DataError("failed writing results file: " + path);
}

DetectionDataset build_detection_dataset(const ExperimentContext& ctx, int n,
                                         std::uint64_t stream_base) {
    require(n > 0, "build_detection_dataset: n must be positive");
    DetectionDataset ds;
    ds.x.resize(2 * ctx.sys.P, n);
    ds.d.resize(2 * ctx.sys.P, n);
    ds.w.resize(2 * ctx.sys.L(), n);
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(ctx.sys.seed, stream_base + static_cast<std::uint64_t>(i));
        FrameSample f = gen_frame(ctx, std::nullopt, rng);
        ds.x.col(i) = f.xhat.real_form;
        ds.d.col(i) = f.d_real;
        ds.w.col(i) = f.w_real;
    }
    return ds;
}

ReconstructionDataset build_reconstruction_dataset(const ExperimentContext& ctx,
                                                   const DetectionNetwork& det,
                                                   int n,
                                                   std::uint64_t stream_base,
                                                   int beta) {
    require(n > 0, "build_reconstruction_dataset: n must be positive");
    const SystemConfig& sys = ctx.sys;
    ReconstructionDataset ds;
    ds.x.resize(2 * sys.N, n);
    ds.h.resize(2 * sys.N, n);
    for (int i0 = 0; i0 < n; i0 += static_cast<int>(kChunk)) {
        const int chunk = std::min<int>(static_cast<int>(kChunk), n - i0);
        Mat X(2 * sys.P, chunk);
        for (int j = 0; j < chunk; ++j) {
            Rng rng = make_stream(sys.seed,
                                  stream_base + static_cast<std::uint64_t>(i0 + j));
            FrameSample f = gen_frame(ctx, std::nullopt, rng);
            X.col(j) = f.xhat.real_form;
            ds.h.col(i0 + j) = f.h_real;
        }
        DetectionOutput out = detect_forward(det, X, ctx.Qhat);
        for (int j = 0; j < chunk; ++j) {
            const Bits dec_p = qpsk_hard_bits(real_to_complex(out.w().col(j)));
            const FeedbackBits fb = disassemble_feedback(dec_p, sys.M(), sys.N);
            const ScaBihtResult sr =
                sca_biht(fb.y_real, fb.y_imag, fb.z, estimate_sparsity(fb.z),
                         ctx.Phi, beta);
            ds.x.col(i0 + j) = complex_to_real(sr.h);
        }
    }
    return ds;
}

} // namespace csifb
