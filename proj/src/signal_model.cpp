#include "csifb/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csifb {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

cplx draw_cn(double variance, Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

} // namespace

void SystemConfig::validate() const {
    if (N <= 0) throw ConfigError("N must be positive");
    if (!is_pow2(P)) throw ConfigError("P must be a power of two");
    if (c <= 0.0) throw ConfigError("c must be positive");
    if (M() <= 0) throw ConfigError("M = round(c*N) must be positive");
    if (K < 1 || K > N) throw ConfigError("K must satisfy 1 <= K <= N");
    if (rho < 0.0 || rho > 1.0) throw ConfigError("rho must be in [0,1]");
    if (E_u <= 0.0) throw ConfigError("E_u must be positive");
    if (U < 1) throw ConfigError("U must be >= 1");
    if (L() > P) throw ConfigError("L = ceil((2M+N)/2) must not exceed P");
}

CsiVector gen_sparse_csi(const SystemConfig& cfg, Rng& rng) {
    if (cfg.K > cfg.N) throw ConfigError("gen_sparse_csi: K > N");
    // Support: uniform without replacement (partial Fisher-Yates).
    std::vector<int> idx(cfg.N);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < cfg.K; ++i) {
        std::uniform_int_distribution<int> pick(i, cfg.N - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<int> support(idx.begin(), idx.begin() + cfg.K);
    std::sort(support.begin(), support.end());

    CsiVector h;
    h.values = CVec::Zero(cfg.N);
    h.support = std::move(support);
    for (int k : h.support) h.values[k] = draw_cn(1.0 / cfg.N, rng);
    return h;
}

ChannelVector gen_uplink_channel(const SystemConfig& cfg, Rng& rng) {
    ChannelVector g;
    g.values.resize(cfg.N);
    do {
        for (int i = 0; i < cfg.N; ++i) g.values[i] = draw_cn(1.0 / cfg.N, rng);
    } while (g.values.norm() < 1e-9);  // degenerate channel guard
    return g;
}

Bits gen_ulus_bits(const SystemConfig& cfg, Rng& rng) {
    Bits bits(2 * static_cast<std::size_t>(cfg.P));
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
    return bits;
}

double snr_to_variance(double snr_db, double E_u) {
    require(E_u > 0.0, "snr_to_variance: E_u must be positive");
    return E_u / std::pow(10.0, snr_db / 10.0);
}

NoiseMatrix gen_noise(const SystemConfig& cfg, double variance, Rng& rng) {
    require(variance >= 0.0, "gen_noise: negative variance");
    NoiseMatrix n;
    n.variance = variance;
    if (variance == 0.0) {
        n.values = CMat::Zero(cfg.N, cfg.P);
        return n;
    }
    n.values.resize(cfg.N, cfg.P);
    for (int j = 0; j < cfg.P; ++j)
        for (int i = 0; i < cfg.N; ++i) n.values(i, j) = draw_cn(variance, rng);
    return n;
}

CMat apply_uplink_channel(const ChannelVector& g, const CVec& x,
                          const NoiseMatrix& noise) {
    require(noise.values.rows() == g.values.size() &&
                noise.values.cols() == x.size(),
            "apply_uplink_channel: dimension mismatch");
    // Scalar loop keeps each entry exactly g_i * x_p + n_ip.
    CMat R(g.values.size(), x.size());
    for (Eigen::Index p = 0; p < x.size(); ++p)
        for (Eigen::Index i = 0; i < g.values.size(); ++i)
            R(i, p) = g.values[i] * x[p] + noise.values(i, p);
    return R;
}

} // namespace csifb
