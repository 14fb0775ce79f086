#pragma once

#include "csifb/common.hpp"
#include "csifb/rng.hpp"

namespace csifb {

/// Link-level dimensioning. M and L are always derived from (c, N) so the
/// stored state can never go inconsistent.
struct SystemConfig {
    int N = 64;          ///< BS antenna count
    int P = 512;         ///< UL-US length in symbols (power of two)
    double c = 2.0;      ///< sampling rate, M = round(c * N)
    int K = 8;           ///< CSI sparsity
    double rho = 0.10;   ///< power proportion given to the feedback signal
    double E_u = 1.0;    ///< per-user transmit power
    int U = 1;           ///< user count (informational)
    std::uint64_t seed = 1;

    int M() const { return static_cast<int>(std::lround(c * N)); }
    int feedback_len() const { return 2 * M() + N; }
    int L() const { return (feedback_len() + 1) / 2; }  // ceil((2M+N)/2)

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

/// K-sparse downlink CSI h; support indices strictly increasing.
struct CsiVector {
    CVec values;               // length N
    std::vector<int> support;  // indices of the non-zeros
};

/// Uplink channel g; guarded against the all-zero draw.
struct ChannelVector {
    CVec values;  // length N
};

struct NoiseMatrix {
    CMat values;      // N x P
    double variance;  // per complex entry
};

CsiVector gen_sparse_csi(const SystemConfig& cfg, Rng& rng);
ChannelVector gen_uplink_channel(const SystemConfig& cfg, Rng& rng);

/// 2P fair bits; QPSK turns them into the P UL-US symbols.
Bits gen_ulus_bits(const SystemConfig& cfg, Rng& rng);

/// sigma^2 = E_u / 10^(snr_db/10)
double snr_to_variance(double snr_db, double E_u);

/// CSCG noise, `variance` per complex entry (variance/2 per rail).
NoiseMatrix gen_noise(const SystemConfig& cfg, double variance, Rng& rng);

/// R = g x + N_u (rank-1 outer product plus noise).
CMat apply_uplink_channel(const ChannelVector& g, const CVec& x,
                          const NoiseMatrix& noise);

} // namespace csifb
