#pragma once

#include <functional>
#include <optional>

#include "csifb/detector.hpp"
#include "csifb/frontend.hpp"
#include "csifb/harness/config.hpp"
#include "csifb/onebit_codec.hpp"
#include "csifb/reconstruction.hpp"
#include "csifb/spreading.hpp"

namespace csifb {

/// Per-experiment fixtures regenerated deterministically from the master
/// seed: the measurement matrix (shared by compressor and reconstructor)
/// and the spreading matrices.
struct ExperimentContext {
    SystemConfig sys;
    MeasurementMatrix Phi;
    SpreadingMatrix Q;
    RealSpreadingMatrix Qhat;
};

ExperimentContext make_context(const SystemConfig& cfg);

/// One Monte-Carlo frame with every intermediate needed as training
/// input or label. `snr_db == nullopt` is the explicit noise-free setting.
struct FrameSample {
    CsiVector h;
    ChannelVector g;
    Bits d_bits;      // 2P
    CVec d_sym;       // P
    FeedbackBits p;
    MfvSymbols w;     // L
    CVec x;           // P
    CMat R;           // N x P; empty unless keep_received
    ExtractedFeature xhat;
    Vec d_real, w_real, h_real;
    bool noise_free = false;
};

FrameSample gen_frame(const ExperimentContext& ctx, std::optional<double> snr_db,
                      Rng& rng, bool keep_received = false);

/// Streams (decisions, truth) frame bit pairs until `stop_errors` errors
/// are seen or `max_frames` frames are consumed.
struct BerResult {
    double ber = 0.0;
    long frames_used = 0;
    long errors = 0;
    long bits = 0;
    bool hit_cap = false;
};
BerResult eval_ber(const std::function<std::pair<Bits, Bits>(long)>& frame_bits,
                   long stop_errors, long max_frames);

/// Mean of per-sample ||h_hat - h||^2 / ||h||^2 over columns; zero-norm
/// labels are skipped and counted.
double eval_nmse(const Mat& h_hat, const Mat& h_real, long* skipped = nullptr);

struct ResultRow {
    std::string scheme;
    double snr_db;
    double ber_ulus;
    double ber_mfv;
    double nmse;
    long frames_used;
    long bit_errors_observed;  // sum over both streams
    double wall_clock_s;
};

/// One (scheme, SNR) Monte-Carlo point. For the proposed scheme `det`
/// (and `rec`) must be non-null; the baseline needs neither. `snr_index`
/// keys the frame streams so every scheme sees identical frames.
ResultRow run_point(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                    const std::string& scheme, std::size_t snr_index,
                    double snr_db, const DetectionNetwork* det,
                    const RefinementNetwork* rec, int baseline_recon_beta);

/// Every (scheme, SNR) combination requested by the config.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg,
                                      const DetectionNetwork* det,
                                      const RefinementNetwork* rec);

void write_results_csv(const std::string& path,
                       const std::vector<ResultRow>& rows);

/// Noise-free detection training data (inputs and labels, Eq-real forms).
DetectionDataset build_detection_dataset(const ExperimentContext& ctx, int n,
                                         std::uint64_t stream_base);

/// Reconstruction training data: sca_biht features from the trained
/// detector's demodulated bits (noise-free frames), labels the true CSI.
ReconstructionDataset build_reconstruction_dataset(const ExperimentContext& ctx,
                                                   const DetectionNetwork& det,
                                                   int n,
                                                   std::uint64_t stream_base,
                                                   int beta);

} // namespace csifb
