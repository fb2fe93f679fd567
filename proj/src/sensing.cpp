#include "byzdet/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "byzdet/numerics.hpp"

namespace byzdet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool CodewordDistribution::is_valid(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

void validate_sensor(const SensorSpec& sensor) {
    const auto& t = sensor.thresholds;
    if (t.size() < 3)
        throw std::invalid_argument("sensor: threshold ladder needs at least 3 entries");
    const auto n = t.size() - 1;
    if ((n & (n - 1)) != 0)
        throw std::invalid_argument("sensor: codeword count must be a power of two");
    if (t.front() != -kInf || t.back() != kInf)
        throw std::invalid_argument("sensor: ladder must start at -inf and end at +inf");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i - 1] < t[i]))
            throw std::invalid_argument("sensor: thresholds must be strictly increasing");
    if (!(sensor.gain2 >= 0.0))
        throw std::invalid_argument("sensor: gain2 must be nonnegative");
}

std::vector<double> equiprobable_h0_thresholds(int q_bits, double sigma_n2) {
    if (q_bits < 1 || q_bits > 8)
        throw std::invalid_argument("q_bits must lie in [1,8]");
    const int cells = 1 << q_bits;
    const double sigma = std::sqrt(sigma_n2);
    std::vector<double> interior;
    interior.reserve(cells - 1);
    for (int k = 1; k < cells; ++k) {
        const double tail = 1.0 - static_cast<double>(k) / cells;  // P(Z > tau/sigma)
        interior.push_back(sigma * q_tail_inverse(tail));
    }
    return interior;
}

std::vector<double> make_threshold_ladder(const std::vector<double>& interior) {
    std::vector<double> ladder;
    ladder.reserve(interior.size() + 2);
    ladder.push_back(-kInf);
    ladder.insert(ladder.end(), interior.begin(), interior.end());
    ladder.push_back(kInf);
    return ladder;
}

double beta_h(const SignalModel& model, const SensorSpec& sensor, Hypothesis h) {
    if (h == Hypothesis::H0) return std::sqrt(model.sigma_n2);
    return std::sqrt(model.sigma_n2 + model.sparsity * model.sigma_x2 * sensor.gain2);
}

double sample_sparse_observation(const SignalModel& model, const SensorSpec& sensor,
                                 Hypothesis h, RandomStream& rng,
                                 int* support_count_out) {
    const double noise = rng.normal(0.0, std::sqrt(model.sigma_n2));
    if (h == Hypothesis::H0 || model.sparsity == 0.0 || sensor.gain2 == 0.0) {
        if (support_count_out) *support_count_out = 0;
        return noise;
    }

    const int m = model.dimension;
    std::vector<double> op(static_cast<std::size_t>(m));
    double norm2 = 0.0;
    for (double& v : op) {
        v = rng.normal();
        norm2 += v * v;
    }
    // Degenerate draw of the operator: retry is overkill, just fall back to noise.
    if (norm2 <= 0.0) {
        if (support_count_out) *support_count_out = 0;
        return noise;
    }
    const double scale = std::sqrt(sensor.gain2 / norm2);

    const double sigma_x = std::sqrt(model.sigma_x2);
    double signal = 0.0;
    int support = 0;
    for (int i = 0; i < m; ++i) {
        if (rng.bernoulli(model.sparsity)) {
            ++support;
            signal += op[static_cast<std::size_t>(i)] * scale * rng.normal(0.0, sigma_x);
        }
    }
    if (support_count_out) *support_count_out = support;
    return signal + noise;
}

double sample_asymptotic_observation(const SignalModel& model, const SensorSpec& sensor,
                                     Hypothesis h, RandomStream& rng) {
    return rng.normal(0.0, beta_h(model, sensor, h));
}

Codeword quantize(double y, const SensorSpec& sensor) {
    const auto& t = sensor.thresholds;
    const auto it = std::upper_bound(t.begin(), t.end(), y);
    const int j = static_cast<int>(it - t.begin());
    // y < t.back() == +inf always holds for finite y, so 1 <= j <= 2^q.
    return Codeword{j};
}

CodewordDistribution honest_codeword_pmf(const SignalModel& model,
                                         const SensorSpec& sensor, Hypothesis h) {
    const double beta = beta_h(model, sensor, h);
    const auto& t = sensor.thresholds;
    CodewordDistribution dist;
    dist.probs.resize(t.size() - 1);
    double upper = 1.0;  // Q(tau_0 / beta) with tau_0 = -inf
    for (std::size_t j = 1; j < t.size(); ++j) {
        const double lower = q_tail(t[j] / beta);
        dist.probs[j - 1] = std::max(0.0, upper - lower);
        upper = lower;
    }
    return dist;
}

std::vector<double> make_reference_thresholds(const SensorSpec& base, double offset,
                                              bool mirror_high) {
    if (!(offset > 0.0))
        throw std::invalid_argument("make_reference_thresholds: offset must be positive");
    validate_sensor(base);
    const auto& t = base.thresholds;
    const double lowest = t[1];
    const double highest = t[t.size() - 2];
    // Shift the whole ladder so every finite reference threshold clears the
    // regular ladder by at least `offset`, preserving spacing.
    const double shift = mirror_high ? (highest - lowest) + offset
                                     : -((highest - lowest) + offset);
    std::vector<double> out(t.size());
    out.front() = -kInf;
    out.back() = kInf;
    for (std::size_t j = 1; j + 1 < t.size(); ++j) out[j] = t[j] + shift;
    return out;
}

AssumptionCheck assumption_check(const SignalModel& model, const SensorSpec& sensor) {
    double mass = 1.0;
    for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
        const CodewordDistribution pmf = honest_codeword_pmf(model, sensor, h);
        const double top = *std::max_element(pmf.probs.begin(), pmf.probs.end());
        mass = std::min(mass, top);
    }
    return AssumptionCheck{mass >= 1.0 - 1e-6, mass};
}

int reference_anchor_codeword(const SensorSpec& sensor) {
    // Low-side ladders push all mass to the top codeword; mirrored ladders to v_1.
    const auto& t = sensor.thresholds;
    const double highest = t[t.size() - 2];
    return highest < 0.0 ? sensor.codeword_count() : 1;
}

}  // namespace byzdet
