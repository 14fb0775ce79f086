#pragma once

#include "csifb/common.hpp"
#include "csifb/signal_model.hpp"

namespace csifb {

/// ZF-equalized transmitted-signal feature and its real form.
struct ExtractedFeature {
    CVec values;    // length P
    Vec real_form;  // [Re, Im], length 2P
};

/// x = sqrt(rho E) s + sqrt((1-rho) E) d.
CVec superimpose(const CVec& s, const CVec& d, double rho, double E_u);

/// x_hat = g^dag R with g^dag = g^H / ||g||^2 (closed-form rank-1 pinv).
ExtractedFeature zf_equalize(const ChannelVector& g, const CMat& R);

/// [Re(v), Im(v)] concatenation and its inverse; mutually inverse isometries.
Vec complex_to_real(const CVec& v);
CVec real_to_complex(const Vec& v);

} // namespace csifb
