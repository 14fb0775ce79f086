#include "csifb/frontend.hpp"

namespace csifb {

CVec superimpose(const CVec& s, const CVec& d, double rho, double E_u) {
    require(s.size() == d.size(), "superimpose: length mismatch");
    require(rho >= 0.0 && rho <= 1.0, "superimpose: rho outside [0,1]");
    require(E_u > 0.0, "superimpose: E_u must be positive");
    return std::sqrt(rho * E_u) * s + std::sqrt((1.0 - rho) * E_u) * d;
}

ExtractedFeature zf_equalize(const ChannelVector& g, const CMat& R) {
    require(R.rows() == g.values.size(), "zf_equalize: R rows != N");
    const double gnorm2 = g.values.squaredNorm();
    require(gnorm2 > 0.0, "zf_equalize: zero channel");
    ExtractedFeature f;
    f.values = (R.transpose() * g.values.conjugate()) / gnorm2;
    f.real_form = complex_to_real(f.values);
    return f;
}

Vec complex_to_real(const CVec& v) {
    Vec out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

CVec real_to_complex(const Vec& v) {
    require(v.size() % 2 == 0, "real_to_complex: odd length");
    const Eigen::Index n = v.size() / 2;
    CVec out(n);
    out.real() = v.head(n);
    out.imag() = v.tail(n);
    return out;
}

} // namespace csifb
