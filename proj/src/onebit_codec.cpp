#include "csifb/onebit_codec.hpp"

#include <cmath>

namespace csifb {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}

Bits FeedbackBits::concat() const {
    Bits out;
    out.reserve(payload_len() + (padded ? 1 : 0));
    out.insert(out.end(), y_real.begin(), y_real.end());
    out.insert(out.end(), y_imag.begin(), y_imag.end());
    out.insert(out.end(), z.begin(), z.end());
    if (padded) out.push_back(0);
    return out;
}

MeasurementMatrix gen_measurement_matrix(int N, int M, Rng& rng) {
    require(N > 0 && M > 0, "gen_measurement_matrix: N, M must be positive");
    MeasurementMatrix phi;
    phi.values.resize(N, M);
    std::normal_distribution<double> n(0.0, std::sqrt(1.0 / M));
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < N; ++i) phi.values(i, j) = n(rng);
    return phi;
}

std::uint8_t sign01(double v) { return v > 0.0 ? 1 : 0; }

Bits sign01(const Vec& v) {
    Bits out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sign01(v[i]);
    return out;
}

std::pair<Bits, Bits> compress_1bit(const CsiVector& h, const MeasurementMatrix& Phi) {
    require(Phi.values.rows() == h.values.size(), "compress_1bit: Phi rows != N");
    const Vec re = Phi.values.transpose() * h.values.real().matrix();
    const Vec im = Phi.values.transpose() * h.values.imag().matrix();
    return {sign01(re), sign01(im)};
}

Bits support_bits(const CsiVector& h) {
    Bits z(static_cast<std::size_t>(h.values.size()));
    for (Eigen::Index k = 0; k < h.values.size(); ++k)
        z[k] = (h.values[k] != cplx(0.0, 0.0)) ? 1 : 0;
    return z;
}

FeedbackBits assemble_feedback(Bits y_real, Bits y_imag, Bits z) {
    require(y_real.size() == y_imag.size(), "assemble_feedback: rail length mismatch");
    FeedbackBits p;
    p.y_real = std::move(y_real);
    p.y_imag = std::move(y_imag);
    p.z = std::move(z);
    p.padded = (p.payload_len() % 2) != 0;
    return p;
}

FeedbackBits disassemble_feedback(const Bits& p, int M, int N) {
    const std::size_t payload = 2 * static_cast<std::size_t>(M) + N;
    const bool padded = (payload % 2) != 0;
    require(p.size() == payload + (padded ? 1 : 0),
            "disassemble_feedback: length mismatch");
    FeedbackBits out;
    out.y_real.assign(p.begin(), p.begin() + M);
    out.y_imag.assign(p.begin() + M, p.begin() + 2 * M);
    out.z.assign(p.begin() + 2 * M, p.begin() + 2 * M + N);
    out.padded = padded;
    return out;
}

CVec qpsk_modulate(const Bits& bits) {
    require(bits.size() % 2 == 0, "qpsk_modulate: odd bit count (pad first)");
    CVec w(bits.size() / 2);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double re = (1.0 - 2.0 * bits[2 * i]) * kInvSqrt2;
        const double im = (1.0 - 2.0 * bits[2 * i + 1]) * kInvSqrt2;
        w[static_cast<Eigen::Index>(i)] = {re, im};
    }
    return w;
}

MfvSymbols qpsk_modulate(const FeedbackBits& p) {
    return {qpsk_modulate(p.concat())};
}

Bits qpsk_hard_bits(const CVec& symbols) {
    Bits bits(2 * static_cast<std::size_t>(symbols.size()));
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = sign01(-symbols[i].real());
        bits[2 * i + 1] = sign01(-symbols[i].imag());
    }
    return bits;
}

FeedbackBits qpsk_demodulate(const CVec& w_hat, const SystemConfig& cfg) {
    require(w_hat.size() == cfg.L(), "qpsk_demodulate: symbol count != L");
    return disassemble_feedback(qpsk_hard_bits(w_hat), cfg.M(), cfg.N);
}

int estimate_sparsity(const Bits& z_hat) {
    int count = 0;
    for (auto b : z_hat) count += (b != 0);
    return count > 0 ? count : 1;
}

} // namespace csifb
