#include "byzdet/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "byzdet/numerics.hpp"

namespace byzdet {

StatisticMoments statistic_moments(std::span<const std::vector<double>> weights,
                                   std::span<const CodewordDistribution> pmfs_h0,
                                   std::span<const CodewordDistribution> pmfs_h1) {
    if (weights.size() != pmfs_h0.size() || weights.size() != pmfs_h1.size())
        throw std::invalid_argument("statistic_moments: dimension mismatch");

    StatisticMoments m;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto& d = weights[i];
        const CodewordDistribution* pmf[2] = {&pmfs_h0[i], &pmfs_h1[i]};
        double* mean[2] = {&m.mean_h0, &m.mean_h1};
        double* var[2] = {&m.var_h0, &m.var_h1};
        for (int h = 0; h < 2; ++h) {
            if (pmf[h]->size() != static_cast<int>(d.size()))
                throw std::invalid_argument("statistic_moments: pmf/weight width mismatch");
            double first = 0.0, second = 0.0;
            for (int j = 0; j < pmf[h]->size(); ++j) {
                const double w = d[static_cast<std::size_t>(j)];
                first += (*pmf[h])[j] * w;
                second += (*pmf[h])[j] * w * w;
            }
            *mean[h] += first;
            *var[h] += second - first * first;  // per-sensor variance, sensors independent
        }
    }
    m.var_h0 = std::max(0.0, m.var_h0);
    m.var_h1 = std::max(0.0, m.var_h1);
    return m;
}

namespace {
double exceed_probability(double mean, double var, double threshold) {
    if (var > 0.0) return q_tail((threshold - mean) / std::sqrt(var));
    return mean > threshold ? 1.0 : 0.0;  // deterministic statistic
}
}  // namespace

PerformancePoint predict_performance(const StatisticMoments& m, double threshold,
                                     double prior_h0, double prior_h1) {
    PerformancePoint p;
    p.prior_h0 = prior_h0;
    p.prior_h1 = prior_h1;
    p.pd = exceed_probability(m.mean_h1, m.var_h1, threshold);
    p.pf = exceed_probability(m.mean_h0, m.var_h0, threshold);
    p.pe = prior_h0 * p.pf + prior_h1 * (1.0 - p.pd);
    return p;
}

ThresholdResult adaptive_threshold(const StatisticMoments& m, double target_pfa) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0))
        throw std::invalid_argument("adaptive_threshold: target_pfa must lie in (0,1)");
    if (m.var_h0 <= 0.0) return ThresholdResult{m.mean_h0, true};
    return ThresholdResult{q_tail_inverse(target_pfa) * std::sqrt(m.var_h0) + m.mean_h0,
                           false};
}

double deflection_coefficient(const StatisticMoments& m) {
    if (!(m.var_h1 > 0.0))
        throw std::runtime_error("deflection_coefficient: var_h1 must be positive");
    const double gap = m.mean_h1 - m.mean_h0;
    return gap * gap / m.var_h1;
}

CrlbResult crlb_attack_parameter(double x, long long n_samples) {
    if (n_samples < 1)
        throw std::invalid_argument("crlb_attack_parameter: need at least one sample");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("crlb_attack_parameter: x must lie in [0,1]");
    if (x == 0.0 || x == 1.0) return CrlbResult{0.0, true};
    return CrlbResult{x * (1.0 - x) / static_cast<double>(n_samples), false};
}

}  // namespace byzdet
