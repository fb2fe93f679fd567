#pragma once

#include <optional>
#include <span>
#include <vector>

#include "byzdet/analysis.hpp"
#include "byzdet/byzantine.hpp"
#include "byzdet/sensing.hpp"

namespace byzdet {

/// Per-sensor, per-codeword fusion weights (one row per sensor).
struct FusionWeights {
    std::vector<std::vector<double>> rows;

    std::size_t sensor_count() const { return rows.size(); }
};

/// Outcome of one fusion-rule evaluation.  decide_h1 holds exactly when
/// statistic > threshold; ties go to H0.
struct DetectorVerdict {
    double statistic = 0.0;
    double threshold = 0.0;
    bool decide_h1 = false;
    std::optional<double> p_hat;
    std::optional<double> x_hat;
    std::optional<std::vector<bool>> keep_mask;
};

struct MleOptions {
    double p_max = 0.5;
    double p_tol = 1e-6;
};

struct RsOptions {
    double p_max = 0.5;
    double p_tol = 1e-6;
    int anchor = 0;  // reference anchor codeword; 0 selects the top codeword
};

/// sum_i weights[i][report_i].
double weighted_statistic(std::span<const Codeword> reports, const FusionWeights& weights);

// ---------------------------------------------------------------------------
// Attack-parameter estimation from reference sensors
// ---------------------------------------------------------------------------

/// MLE of x = alpha * P_A from reference reports accumulated over any number
/// of time steps: 1 - (anchor-codeword count) / total, clamped to [0,1].
double attack_estimate_from_counts(long long anchor_count, long long total);

/// Convenience wrapper counting the anchor codeword (top codeword by
/// default) in a reference report span.
double estimate_attack_parameter(std::span<const Codeword> reference_reports, int q_bits,
                                 int anchor = 0);

// ---------------------------------------------------------------------------
// Sparsity MLE
// ---------------------------------------------------------------------------

/// argmax_p of the report log-likelihood under H1 with the attack mixture at
/// `x` (x = 0 recovers the attack-free GLRT estimate).  Sensors with equal
/// quantizers and gains are collapsed into codeword counts, so the search
/// cost is independent of the network size for homogeneous networks.
double estimate_sparsity(std::span<const Codeword> reports,
                         std::span<const SensorSpec> sensors, const SignalModel& model,
                         double x, const MleOptions& opt = {});

// ---------------------------------------------------------------------------
// Benchmark LRT (clairvoyant: true sparsity and attack parameters)
// ---------------------------------------------------------------------------

/// Per-codeword log-likelihood ratios log(P(u|H1)/P(u|H0)) under the true
/// attack mixture.  Cells with vanishing probability get a poisoned weight
/// that trips an error if a report ever lands there.
FusionWeights lrt_weights(const SignalModel& model_true,
                          std::span<const SensorSpec> sensors,
                          const AttackParams& attack_true);

double lrt_statistic(std::span<const Codeword> reports, const SignalModel& model_true,
                     std::span<const SensorSpec> sensors, const AttackParams& attack_true);

// ---------------------------------------------------------------------------
// GLRT / quantized LMPT (attack-free designs)
// ---------------------------------------------------------------------------

/// g_{i,j} = A_{i,j,1}(p_hat) - A_{i,j,0}.
FusionWeights glrt_weights(const SignalModel& model, std::span<const SensorSpec> sensors,
                           double p_hat);

/// MLE of p followed by the simplified linear fusion rule against the given
/// threshold.
DetectorVerdict glrt_decide(std::span<const Codeword> reports, const SignalModel& model,
                            std::span<const SensorSpec> sensors, double threshold,
                            const MleOptions& opt = {});

/// Same pipeline with the threshold calibrated from the detector's own
/// (attack-free) model at the target false-alarm probability.
DetectorVerdict glrt_decide_adaptive(std::span<const Codeword> reports,
                                     const SignalModel& model,
                                     std::span<const SensorSpec> sensors,
                                     double target_pfa, const MleOptions& opt = {});

/// Score-test weights: derivative of the honest log-pmf in the sparsity at
/// `at_p`.  Infinite thresholds contribute zero boundary terms; vanishing
/// cell probabilities are an error.
FusionWeights lmpt_weights(const SignalModel& model, std::span<const SensorSpec> sensors,
                           double at_p);

DetectorVerdict lmpt_decide(std::span<const Codeword> reports,
                            const FusionWeights& weights, double threshold);

// ---------------------------------------------------------------------------
// Reference-sensor detectors (unknown p and x)
// ---------------------------------------------------------------------------

/// Full pipeline: estimate x from reference reports, estimate p from the
/// regular reports under the attack mixture, fuse with the corrected
/// weights, and calibrate the threshold from the estimated model.
DetectorVerdict glrtrs_decide(std::span<const Codeword> regular_reports,
                              std::span<const SensorSpec> regular_sensors,
                              std::span<const Codeword> reference_reports,
                              int reference_q_bits, const SignalModel& model,
                              double target_pfa, const RsOptions& opt = {});

/// Same with the attack estimate supplied by the caller.
DetectorVerdict glrtrs_decide_with_x(std::span<const Codeword> regular_reports,
                                     std::span<const SensorSpec> regular_sensors,
                                     double x_hat, const SignalModel& model,
                                     double target_pfa, const RsOptions& opt = {});

/// Attack-corrected score weights: derivative of the mixture log-pmf in the
/// sparsity at p = 0 with the attack parameter frozen at x_hat.  Equals
/// lmpt_weights(model, sensors, 0) when x_hat = 0.
FusionWeights lmptrs_weights(const SignalModel& model,
                             std::span<const SensorSpec> sensors, double x_hat);

DetectorVerdict lmptrs_decide(std::span<const Codeword> regular_reports,
                              std::span<const SensorSpec> regular_sensors,
                              std::span<const Codeword> reference_reports,
                              int reference_q_bits, const SignalModel& model,
                              double target_pfa, const RsOptions& opt = {});

DetectorVerdict lmptrs_decide_with_x(std::span<const Codeword> regular_reports,
                                     std::span<const SensorSpec> regular_sensors,
                                     double x_hat, const SignalModel& model,
                                     double target_pfa, const RsOptions& opt = {});

// ---------------------------------------------------------------------------
// Enhanced detectors (known alpha): reputation filter + residual-attack update
// ---------------------------------------------------------------------------

enum class RsDetectorKind { Glrtrs, Lmptrs };

/// Per-sensor codeword counts over time steps 1..t plus the residual
/// Byzantine-fraction bookkeeping.
struct ReputationState {
    std::vector<std::vector<double>> counts;  // [regular sensor][codeword]
    long long t = 0;
    double alpha_t = 0.0;
    std::vector<bool> flagged_ever;

    void init(int n_sensors, int codeword_count, double alpha0);
    void record(std::span<const Codeword> reports);
};

/// Deviation test of each sensor's empirical codeword pmf against the
/// benchmark R_{i,j} = min(P(u=v_j | honest, H1), P(u=v_j | honest, H0)):
/// kept iff sum_j |R_{i,j} - empirical_{i,j}| <= tau.
std::vector<bool> reputation_filter(const ReputationState& state,
                                    std::span<const CodewordDistribution> honest_pmfs_h0,
                                    std::span<const CodewordDistribution> honest_pmfs_h1,
                                    double tau);

struct EnhancedOptions {
    double filter_tau = 0.5;
    /// Transient allowance added to tau while empirical pmfs are still
    /// coarse: the filter uses tau + filter_slack / sqrt(t).  Zero applies
    /// the bare tau from the first step.
    double filter_slack = 1.25;
    double nominal_p = 0.05;  // H1 benchmark sparsity on the LMPT path
    RsOptions rs;
};

struct EnhancedState {
    ReputationState reputation;
    long long ref_anchor_count = 0;
    long long ref_total = 0;

    void init(int n_regular, int codeword_count, double alpha_known);
};

/// One time step of the enhanced detector: update reputation counts, drop
/// sensors whose deviation exceeds the filter threshold (flags are
/// permanent), refresh the residual attack estimate
/// x_eff = x_ref * alpha_t / alpha, and run the base fusion rule over the
/// kept sensors with a threshold recalibrated to the filtered population.
DetectorVerdict enhanced_decide(std::span<const Codeword> regular_reports,
                                std::span<const SensorSpec> regular_sensors,
                                std::span<const Codeword> reference_reports_step,
                                int reference_q_bits, const SignalModel& model,
                                RsDetectorKind base, double alpha_known,
                                double target_pfa, EnhancedState& state,
                                const EnhancedOptions& opt = {});

}  // namespace byzdet
