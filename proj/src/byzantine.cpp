#include "byzdet/byzantine.hpp"

#include <cmath>
#include <stdexcept>

namespace byzdet {

Codeword byzantine_report(Codeword z, double p_attack, int codeword_count,
                          RandomStream& rng) {
    return byzantine_report_from_uniforms(z, p_attack, codeword_count, rng.uniform(),
                                          rng.uniform());
}

Codeword byzantine_report_from_uniforms(Codeword z, double p_attack, int codeword_count,
                                        double flip_u, double pick_u) {
    if (z.index < 1 || z.index > codeword_count)
        throw std::invalid_argument("byzantine_report: codeword out of range");
    if (codeword_count < 2 || flip_u >= p_attack) return z;
    // Uniform over the 2^q - 1 wrong codewords.
    int pick = 1 + static_cast<int>(pick_u * (codeword_count - 1));
    if (pick > codeword_count - 1) pick = codeword_count - 1;  // pick_u == 1 guard
    return Codeword{pick >= z.index ? pick + 1 : pick};
}

CodewordDistribution byzantine_codeword_pmf(const CodewordDistribution& honest,
                                            double p_attack) {
    const double wrong = p_attack / (honest.size() - 1);
    CodewordDistribution out;
    out.probs.resize(honest.probs.size());
    for (int j = 0; j < honest.size(); ++j)
        out[j] = honest[j] * (1.0 - p_attack) + (1.0 - honest[j]) * wrong;
    return out;
}

CodewordDistribution mixture_codeword_pmf(const CodewordDistribution& honest,
                                          const AttackParams& attack) {
    const CodewordDistribution byz = byzantine_codeword_pmf(honest, attack.p_attack);
    CodewordDistribution out;
    out.probs.resize(honest.probs.size());
    for (int j = 0; j < honest.size(); ++j)
        out[j] = (1.0 - attack.alpha) * honest[j] + attack.alpha * byz[j];
    return out;
}

CodewordDistribution mixture_codeword_pmf_x(const CodewordDistribution& honest, double x) {
    const double inv = 1.0 / (honest.size() - 1);
    CodewordDistribution out;
    out.probs.resize(honest.probs.size());
    for (int j = 0; j < honest.size(); ++j)
        out[j] = honest[j] + x * (inv - honest[j] - honest[j] * inv);
    return out;
}

double blinding_product(std::span<const SensorSpec> sensors, const SignalModel& model,
                        std::span<const std::vector<double>> weights) {
    if (sensors.size() != weights.size())
        throw std::invalid_argument("blinding_product: weights/sensors size mismatch");

    // E(L|H1) - E(L|H0) = sum (A1 - A0) d - x * sum (1 + 1/(2^q-1)) (A1 - A0) d,
    // so the root is the ratio of the two weighted attack-direction sums.
    double numerator = 0.0;
    double denominator = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const auto& d = weights[i];
        const auto cells = static_cast<int>(d.size());
        if (cells != sensors[i].codeword_count())
            throw std::invalid_argument("blinding_product: weight row has wrong width");
        const double close = 1.0 + 1.0 / (cells - 1);
        const CodewordDistribution a1 = honest_codeword_pmf(model, sensors[i], Hypothesis::H1);
        const CodewordDistribution a0 = honest_codeword_pmf(model, sensors[i], Hypothesis::H0);
        for (int j = 0; j < cells; ++j) {
            if (!std::isfinite(d[static_cast<std::size_t>(j)]))
                throw std::invalid_argument("blinding_product: non-finite weight");
            const double diff = a1[j] - a0[j];
            const double w = d[static_cast<std::size_t>(j)];
            numerator += diff * w;
            denominator += close * diff * w;
            scale += std::abs(close * diff * w);
        }
    }
    if (scale == 0.0 || std::abs(denominator) <= 1e-14 * scale)
        throw std::runtime_error("blinding_product: weights orthogonal to attack direction");
    return numerator / denominator;
}

}  // namespace byzdet
