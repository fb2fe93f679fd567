#pragma once

#include <functional>
#include <utility>

namespace byzdet {

/// Closed search interval for the scalar optimizer.  Requires lo < hi and
/// both endpoints finite.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Tail distribution function of the standard normal, P(Z > z).
/// Accepts +/-infinity; throws on NaN.  Absolute error below 1e-12 for
/// |z| <= 8.
double q_tail(double z);

/// Standard normal density.
double normal_pdf(double z);

/// Inverse of q_tail on (0, 1): q_tail(q_tail_inverse(p)) == p to 1e-9.
double q_tail_inverse(double p);

struct ScalarMaximum {
    double argmax = 0.0;
    double max = 0.0;
};

/// Derivative-free golden-section maximization over a closed interval.
/// Assumes f is continuous (unimodal for a global guarantee).  Deterministic:
/// identical inputs give identical results; on a plateau the midpoint of the
/// final bracket is returned.  Throws if f evaluates to a non-finite value,
/// reporting the offending point.
ScalarMaximum maximize_scalar(const std::function<double(double)>& f,
                              Interval domain, double tol);

}  // namespace byzdet
