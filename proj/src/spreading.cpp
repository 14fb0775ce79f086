#include "csifb/spreading.hpp"

#include <bit>
#include <numeric>

namespace csifb {

SpreadingMatrix gen_walsh(int P, int L) {
    require(P > 0 && std::has_single_bit(static_cast<unsigned>(P)),
            "gen_walsh: P must be a power of two");
    require(L >= 1 && L <= P, "gen_walsh: need 1 <= L <= P");
    SpreadingMatrix Q;
    Q.P = P;
    Q.values.resize(L, P);
    Q.row_indices.resize(L);
    std::iota(Q.row_indices.begin(), Q.row_indices.end(), 0);
    // Sylvester construction: H(i,j) = (-1)^popcount(i & j).
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < P; ++j)
            Q.values(i, j) = (std::popcount(static_cast<unsigned>(i & j)) & 1) ? -1.0 : 1.0;
    return Q;
}

CVec spread(const CVec& w, const SpreadingMatrix& Q) {
    require(w.size() == Q.values.rows(), "spread: |w| != L");
    return (Q.values.transpose() * w) / std::sqrt(static_cast<double>(Q.L()));
}

RealSpreadingMatrix real_block(const SpreadingMatrix& Q) {
    const int L = Q.L();
    const int P = Q.P;
    RealSpreadingMatrix R;
    R.P = P;
    R.L = L;
    R.values = Mat::Zero(2 * L, 2 * P);
    R.values.topLeftCorner(L, P) = Q.values;
    R.values.bottomRightCorner(L, P) = Q.values;
    return R;
}

Vec despread(const Vec& v, const RealSpreadingMatrix& Qhat) {
    require(v.size() == Qhat.values.cols(), "despread: |v| != 2P");
    return Qhat.values * v;
}

Mat despread(const Mat& v, const RealSpreadingMatrix& Qhat) {
    require(v.rows() == Qhat.values.cols(), "despread: rows != 2P");
    return Qhat.values * v;
}

} // namespace csifb
