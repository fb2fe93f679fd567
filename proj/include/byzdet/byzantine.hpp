#pragma once

#include <span>
#include <vector>

#include "byzdet/random.hpp"
#include "byzdet/sensing.hpp"

namespace byzdet {

/// Attack description: fraction of compromised sensors and their flip
/// probability.  The product alpha * p_attack is the single effective attack
/// parameter the robust detectors estimate.
struct AttackParams {
    double alpha = 0.0;     // fraction of Byzantine sensors
    double p_attack = 0.0;  // flip probability P_A

    double x() const { return alpha * p_attack; }
};

/// One pass through the Byzantine report channel: keep the codeword with
/// probability 1 - p_attack, otherwise replace it with a uniformly chosen
/// different codeword.
Codeword byzantine_report(Codeword z, double p_attack, int codeword_count,
                          RandomStream& rng);

/// Same channel applied deterministically from two pre-drawn uniforms, so a
/// flip decision can be shared across quantizer variants of one sensor.
Codeword byzantine_report_from_uniforms(Codeword z, double p_attack, int codeword_count,
                                        double flip_u, double pick_u);

/// Codeword pmf of a Byzantine sensor:
/// entry j = A_j (1 - P_A) + (1 - A_j) P_A / (2^q - 1).
CodewordDistribution byzantine_codeword_pmf(const CodewordDistribution& honest,
                                            double p_attack);

/// Population mixture (1 - alpha) * honest + alpha * byzantine.
CodewordDistribution mixture_codeword_pmf(const CodewordDistribution& honest,
                                          const AttackParams& attack);

/// Equivalent single-parameter form of the mixture:
/// entry j = A_j + x (1/(2^q-1) - A_j - A_j/(2^q-1)).
CodewordDistribution mixture_codeword_pmf_x(const CodewordDistribution& honest, double x);

/// Attack product alpha * P_A at which the mean of the weighted fusion
/// statistic becomes hypothesis-independent, i.e. the deflection coefficient
/// vanishes and the fusion center is blind.  `weights` holds one row of
/// per-codeword fusion weights per sensor.  Throws when the weights are
/// orthogonal to the attack direction (no finite blinding point).
double blinding_product(std::span<const SensorSpec> sensors, const SignalModel& model,
                        std::span<const std::vector<double>> weights);

}  // namespace byzdet
