#include "byzdet/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace byzdet {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
}  // namespace

double q_tail(double z) {
    if (std::isnan(z)) throw std::invalid_argument("q_tail: NaN input");
    if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
    // Q(z) = erfc(z / sqrt(2)) / 2.  libm's erfc is accurate to a few ulp,
    // well inside the 1e-12 contract.
    return 0.5 * std::erfc(z / kSqrt2);
}

double normal_pdf(double z) {
    if (std::isnan(z)) throw std::invalid_argument("normal_pdf: NaN input");
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double q_tail_inverse(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("q_tail_inverse: p must lie in (0,1)");

    // Acklam's rational approximation for the normal quantile gives ~1e-9;
    // two Newton corrections against q_tail tighten it to full precision.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    // Quantile of the lower-tail CDF at (1 - p); then negate for Q^{-1}.
    const double pl = 1.0 - p;  // P(Z <= x) target
    double x;
    const double plow = 0.02425;
    if (pl < plow) {
        const double q = std::sqrt(-2.0 * std::log(pl));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (pl <= 1.0 - plow) {
        const double q = pl - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - pl));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Newton on q_tail(x) - p = 0; dq/dx = -pdf(x).
    for (int i = 0; i < 2; ++i) {
        const double err = q_tail(x) - p;
        const double pdf = normal_pdf(x);
        if (pdf > 0.0) x += err / pdf;
    }
    return x;
}

ScalarMaximum maximize_scalar(const std::function<double(double)>& f,
                              Interval domain, double tol) {
    if (!(domain.lo < domain.hi) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi))
        throw std::invalid_argument("maximize_scalar: invalid interval");
    if (!(tol > 0.0)) throw std::invalid_argument("maximize_scalar: tol must be positive");

    auto eval = [&](double x) {
        const double v = f(x);
        if (!std::isfinite(v))
            throw std::runtime_error("maximize_scalar: non-finite objective at x=" +
                                     std::to_string(x));
        return v;
    };

    constexpr double kInvPhi = 0.61803398874989484820458683436564;
    constexpr int kMaxIter = 200;

    double a = domain.lo, b = domain.hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = eval(x1);
    double f2 = eval(x2);

    for (int iter = 0; iter < kMaxIter && (b - a) > tol; ++iter) {
        if (f1 > f2) {  // ties shrink from the left, keeping the sweep symmetric
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = eval(x2);
        }
    }

    const double xm = 0.5 * (a + b);
    return ScalarMaximum{xm, eval(xm)};
}

}  // namespace byzdet
