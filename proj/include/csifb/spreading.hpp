#pragma once

#include "csifb/common.hpp"

namespace csifb {

/// L x P Walsh spreading matrix, entries +-1, Q Q^T = P I_L exactly.
struct SpreadingMatrix {
    Mat values;  // L x P
    int P = 0;
    std::vector<int> row_indices;  // Hadamard rows taken (0..L-1)

    int L() const { return static_cast<int>(values.rows()); }
};

/// Real block-diagonal form [[Q,0],[0,Q]] of size 2L x 2P.
struct RealSpreadingMatrix {
    Mat values;  // 2L x 2P
    int P = 0;
    int L = 0;
};

/// Rows 0..L-1 of the order-P Sylvester Hadamard matrix.
SpreadingMatrix gen_walsh(int P, int L);

/// s = (1/sqrt(L)) w Q, length P.
CVec spread(const CVec& w, const SpreadingMatrix& Q);

RealSpreadingMatrix real_block(const SpreadingMatrix& Q);

/// v Qhat^T, length 2L; unnormalized (downstream BN absorbs scale).
Vec despread(const Vec& v, const RealSpreadingMatrix& Qhat);

/// Batched despread: one sample per column (2P x B -> 2L x B).
Mat despread(const Mat& v, const RealSpreadingMatrix& Qhat);

} // namespace csifb
