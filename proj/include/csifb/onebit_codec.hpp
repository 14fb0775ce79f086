#pragma once

#include "csifb/common.hpp"
#include "csifb/rng.hpp"
#include "csifb/signal_model.hpp"

namespace csifb {

/// Gaussian measurement matrix Phi (N x M), fixed per experiment and shared
/// by compressor and reconstructor.
struct MeasurementMatrix {
    Mat values;  // N x M, entries ~ N(0, 1/M)
    std::uint64_t seed = 0;
};

/// Feedback bit stream p = [y_real, y_imag, z], plus one trailing pad bit
/// when 2M+N is odd so QPSK sees an even bit count.
struct FeedbackBits {
    Bits y_real;  // length M
    Bits y_imag;  // length M
    Bits z;       // length N
    bool padded = false;

    std::size_t payload_len() const { return y_real.size() + y_imag.size() + z.size(); }
    /// Concatenation including the pad bit if present.
    Bits concat() const;
};

/// QPSK symbols carrying the feedback bits; length L = ceil((2M+N)/2).
struct MfvSymbols {
    CVec values;
};

MeasurementMatrix gen_measurement_matrix(int N, int M, Rng& rng);

/// 1 for strictly positive entries, 0 otherwise (zero maps to 0).
std::uint8_t sign01(double v);
Bits sign01(const Vec& v);

/// y_real = sign01(Re(h) Phi), y_imag = sign01(Im(h) Phi), each length M.
std::pair<Bits, Bits> compress_1bit(const CsiVector& h, const MeasurementMatrix& Phi);

/// z_k = 1 iff h_k != 0.
Bits support_bits(const CsiVector& h);

FeedbackBits assemble_feedback(Bits y_real, Bits y_imag, Bits z);

/// Splits a concatenated bit stream back into (y_real, y_imag, z),
/// dropping the pad bit. Inverse of assemble_feedback().concat().
FeedbackBits disassemble_feedback(const Bits& p, int M, int N);

/// Gray map: bit pair (b0,b1) -> ((1-2 b0) + j (1-2 b1)) / sqrt(2).
CVec qpsk_modulate(const Bits& bits);
MfvSymbols qpsk_modulate(const FeedbackBits& p);

/// Hard per-rail decisions, b = sign01(-rail); inverse of qpsk_modulate.
Bits qpsk_hard_bits(const CVec& symbols);

/// Full inverse mapping for the MFV: symbols -> bits -> (y_real, y_imag, z).
FeedbackBits qpsk_demodulate(const CVec& w_hat, const SystemConfig& cfg);

/// K_hat = popcount(z_hat), floored at 1.
int estimate_sparsity(const Bits& z_hat);

} // namespace csifb
