#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "byzdet/detectors.hpp"

namespace byzdet {

enum class DetectorKind { Lrt, Glrt, Lmpt, Glrtrs, Lmptrs, EGlrtrs, ELmptrs };

struct DetectorSelection {
    DetectorKind kind = DetectorKind::Lrt;
    std::optional<double> filter_tau;  // E-variants; falls back to config value

    std::string label() const;
};

enum class ThresholdScheme { EquiprobableH0, Explicit };
enum class Surrogate { Asymptotic, ExactBg };
enum class RoleAssignment { Deterministic, Iid, IidPerStep };

/// Full description of one Monte Carlo experiment.  Parsed from a flat
/// key = value config file; presets return ready-made instances.
struct ExperimentConfig {
    std::vector<std::pair<int, int>> networks = {{280, 80}};  // (N, N_ref)
    std::vector<int> q_bits = {1};
    SignalModel model{0.1, 5.0, 1.0, 500};  // sparsity is the true p under H1
    double gain2 = 1.0;
    std::vector<std::pair<double, double>> attacks = {{0.3, 0.5}};  // (alpha, P_A)
    std::vector<DetectorSelection> detectors;
    double target_pfa = 0.4;
    double prior_h0 = 0.5;
    double prior_h1 = 0.5;
    int trials = 10000;
    int time_steps = 1;
    std::uint64_t seed = 20260801;
    ThresholdScheme threshold_scheme = ThresholdScheme::EquiprobableH0;
    std::map<int, std::vector<double>> explicit_thresholds;  // q -> interior ladder
    double filter_tau = 0.5;
    double filter_slack = 1.25;
    double nominal_p = 0.05;
    Surrogate surrogate = Surrogate::Asymptotic;
    double reference_offset = 6.0;
    bool reference_mirror = false;
    RoleAssignment roles = RoleAssignment::Deterministic;
    bool record_all_steps = false;
    bool common_random_numbers = false;
    double p_max = 0.5;
    double p_tol = 1e-6;
    int workers = 1;
};

/// Throws std::invalid_argument on any violated invariant.
void validate_config(const ExperimentConfig& cfg);

/// One sweep point: network and attack coordinates for a single run.
struct Coordinate {
    int n_sensors = 280;
    int n_reference = 80;
    int q_bits = 1;
    double alpha = 0.0;
    double p_attack = 0.0;
};

struct SweepRecord {
    std::string detector;
    int q_bits = 1;
    double alpha = 0.0;
    double p_attack = 0.0;
    int time_step = 1;
    double pe_emp = 0.0, pe_ci = 0.0, pd_emp = 0.0, pf_emp = 0.0;
    double pe_analytic = 0.0, pd_analytic = 0.0, pf_analytic = 0.0;
    double x_hat_mean = 0.0, p_hat_mean = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<std::string> errors;  // aggregated per-detector failure summary
};

/// Result of one Monte Carlo draw: a verdict per detector, per time step,
/// under each true hypothesis.  Detector failures are captured per cell so a
/// single bad trial does not abort the sweep.
struct TrialResult {
    struct Cell {
        DetectorVerdict verdict;
        bool failed = false;
        std::string error;
    };
    // [detector][step][hypothesis]
    std::vector<std::vector<std::array<Cell, 2>>> cells;
};

TrialResult run_trial(const ExperimentConfig& cfg, const Coordinate& coord,
                      long trial_index);

SweepResult run_sweep(const ExperimentConfig& cfg);

/// Stable CSV emission (6 significant digits, byte-identical across reruns).
void emit_csv(const std::vector<SweepRecord>& records, std::ostream& out);
void emit_csv(const std::vector<SweepRecord>& records, const std::string& path);
std::vector<SweepRecord> parse_csv(std::istream& in);

/// Closed-form performance prediction for one detector at one coordinate,
/// used for the *_analytic CSV columns.
struct AnalyticPrediction {
    double pe = 0.0, pd = 0.0, pf = 0.0;
};
AnalyticPrediction predict_detector(const ExperimentConfig& cfg, const Coordinate& coord,
                                    const DetectorSelection& sel);

// ---------------------------------------------------------------------------
// Estimator efficiency study
// ---------------------------------------------------------------------------

struct EstimatorRecord {
    double x_true = 0.0;
    long long n_samples = 0;  // reference reports per replication (N_ref * T)
    int replications = 0;
    double xhat_mean = 0.0;
    double xhat_variance = 0.0;
    double crlb = 0.0;
};

/// Monte Carlo check that the reference-sensor MLE is unbiased and attains
/// x(1-x)/n: i.i.d. per-report Byzantine draws through the report channel.
std::vector<EstimatorRecord> run_estimator_study(const ExperimentConfig& cfg);
void emit_estimator_csv(const std::vector<EstimatorRecord>& records, std::ostream& out);

// ---------------------------------------------------------------------------
// Presets, config files, diagnostics
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Sensor construction shared by the sweep engine, the CLI `check`
/// subcommand and the tests.
struct NetworkViews {
    std::vector<SensorSpec> rs_view;        // reference sensors first
    std::vector<SensorSpec> baseline_view;  // all-regular variant
    int anchor = 0;                         // reference anchor codeword
};
NetworkViews build_network(const ExperimentConfig& cfg, const Coordinate& coord);

struct CoordinateDiagnostics {
    Coordinate coord;
    AssumptionCheck assumption;
    double blinding_glrt = 0.0;  // attack product blinding the GLRT weight family
    double blinding_lmpt = 0.0;  // same for the score-test weights
};
std::vector<CoordinateDiagnostics> run_checks(const ExperimentConfig& cfg);

}  // namespace byzdet
