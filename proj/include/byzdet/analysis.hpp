#pragma once

#include <span>
#include <vector>

#include "byzdet/sensing.hpp"

namespace byzdet {

/// Gaussian approximation of a weighted fusion statistic under the two
/// hypotheses.  Sensors are independent, so variances add per sensor.
struct StatisticMoments {
    double mean_h0 = 0.0;
    double var_h0 = 0.0;
    double mean_h1 = 0.0;
    double var_h1 = 0.0;
};

struct PerformancePoint {
    double pd = 0.0;
    double pf = 0.0;
    double pe = 0.0;
    double prior_h0 = 0.5;
    double prior_h1 = 0.5;
};

struct ThresholdResult {
    double threshold = 0.0;
    bool degenerate = false;  // var_h0 == 0: the statistic is deterministic
};

struct CrlbResult {
    double variance = 0.0;
    bool degenerate = false;  // x at the boundary of [0,1]
};

/// Mean and variance of sum_i sum_j I(u_i = v_j) d_{i,j} under each
/// hypothesis, for per-sensor report pmfs `pmfs_h0` / `pmfs_h1`.
StatisticMoments statistic_moments(std::span<const std::vector<double>> weights,
                                   std::span<const CodewordDistribution> pmfs_h0,
                                   std::span<const CodewordDistribution> pmfs_h1);

/// Gaussian tail evaluation of Pd = P(L > threshold | H1), Pf analogously,
/// and the prior-weighted error probability.  Zero-variance branches behave
/// as step functions.
PerformancePoint predict_performance(const StatisticMoments& m, double threshold,
                                     double prior_h0, double prior_h1);

/// Threshold holding the target false-alarm probability under the Gaussian
/// approximation: Q^{-1}(pfa) * sqrt(var_h0) + mean_h0.
ThresholdResult adaptive_threshold(const StatisticMoments& m, double target_pfa);

/// (E(L|H1) - E(L|H0))^2 / Var(L|H1); throws when var_h1 == 0.
double deflection_coefficient(const StatisticMoments& m);

/// Estimation floor x(1-x)/n for the attack-parameter MLE built on n
/// reference reports.
CrlbResult crlb_attack_parameter(double x, long long n_samples);

}  // namespace byzdet
