#pragma once

#include <vector>

#include "byzdet/random.hpp"

namespace byzdet {

enum class Hypothesis { H0 = 0, H1 = 1 };

/// Bernoulli-Gaussian signal model.  Each of the `dimension` signal
/// components is active with probability `sparsity` and then N(0, sigma_x2);
/// sensor noise is N(0, sigma_n2).
struct SignalModel {
    double sparsity = 0.0;  // p; 0 under H0, small positive under H1
    double sigma_x2 = 1.0;
    double sigma_n2 = 1.0;
    int dimension = 500;  // M
};

inline SignalModel with_sparsity(SignalModel m, double p) {
    m.sparsity = p;
    return m;
}

enum class SensorRole { Honest, Byzantine };

/// One sensor's quantizer and channel description.  `thresholds` holds the
/// full ladder tau_0 < tau_1 < ... < tau_{2^q}, with tau_0 = -inf and
/// tau_{2^q} = +inf, so a q-bit sensor carries 2^q + 1 entries.
struct SensorSpec {
    int id = 0;
    double gain2 = 1.0;  // squared l2-norm of the linear operator h_i
    std::vector<double> thresholds;
    bool is_reference = false;
    SensorRole role = SensorRole::Honest;

    int codeword_count() const { return static_cast<int>(thresholds.size()) - 1; }
};

/// Quantizer output symbol; 1-based index into {v_1, ..., v_{2^q}}.
struct Codeword {
    int index = 1;
    friend bool operator==(Codeword a, Codeword b) { return a.index == b.index; }
    friend bool operator!=(Codeword a, Codeword b) { return a.index != b.index; }
};

/// Probability vector over the 2^q codewords of one sensor under one
/// conditioning (honest, Byzantine, or mixture).
struct CodewordDistribution {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
    double operator[](int j) const { return probs[static_cast<std::size_t>(j)]; }
    double& operator[](int j) { return probs[static_cast<std::size_t>(j)]; }

    /// Entries in [0,1] and summing to one within `tol`.
    bool is_valid(double tol = 1e-12) const;
};

/// Throws std::invalid_argument when the spec violates its invariants
/// (threshold ladder shape, gain sign).
void validate_sensor(const SensorSpec& sensor);

/// Interior thresholds that make each codeword equiprobable under H0.
/// For q=1 this is {0}; the +/-inf endpoints are added by the caller via
/// make_threshold_ladder.
std::vector<double> equiprobable_h0_thresholds(int q_bits, double sigma_n2);

/// Wraps interior thresholds with the -inf / +inf endpoints.
std::vector<double> make_threshold_ladder(const std::vector<double>& interior);

/// Standard deviation of the observation at `sensor` under hypothesis `h`:
/// sqrt(sigma_n2) under H0, sqrt(sigma_n2 + p * sigma_x2 * gain2) under H1.
double beta_h(const SignalModel& model, const SensorSpec& sensor, Hypothesis h);

/// Draws one observation from the exact Bernoulli-Gaussian pipeline: a fresh
/// random operator h_i scaled to the configured gain, a sparse signal with
/// Bernoulli(p) support, and additive noise.  `support_count_out`, when
/// non-null, receives the number of active signal components.
double sample_sparse_observation(const SignalModel& model, const SensorSpec& sensor,
                                 Hypothesis h, RandomStream& rng,
                                 int* support_count_out = nullptr);

/// Draws from the Gaussian N(0, beta_h^2) surrogate used as the fast default
/// in sweeps.
double sample_asymptotic_observation(const SignalModel& model, const SensorSpec& sensor,
                                     Hypothesis h, RandomStream& rng);

/// Maps an observation to its codeword: j such that tau_{j-1} <= y < tau_j
/// (boundary points quantize rightward).
Codeword quantize(double y, const SensorSpec& sensor);

/// Honest codeword probabilities A_{i,j,h} = Q(tau_{j-1}/beta) - Q(tau_j/beta).
CodewordDistribution honest_codeword_pmf(const SignalModel& model,
                                         const SensorSpec& sensor, Hypothesis h);

/// Reference-sensor threshold ladder: the base ladder shifted so its top
/// finite threshold sits `offset` below the smallest finite base threshold
/// (or mirrored above the largest when `mirror_high` is set).  Reference
/// sensors then emit one fixed codeword under both hypotheses.
std::vector<double> make_reference_thresholds(const SensorSpec& base, double offset,
                                              bool mirror_high = false);

struct AssumptionCheck {
    bool holds = false;
    double mass = 0.0;  // min over hypotheses of the modal codeword mass
};

/// Verifies that a reference sensor emits a single codeword with mass at
/// least 1 - 1e-6 under both hypotheses.
AssumptionCheck assumption_check(const SignalModel& model, const SensorSpec& sensor);

/// Codeword the reference construction pins: the top codeword for the
/// low-threshold construction, v_1 for the mirrored one.
int reference_anchor_codeword(const SensorSpec& sensor);

}  // namespace byzdet
