#include "byzdet/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "byzdet/numerics.hpp"

namespace byzdet {

namespace {

constexpr double kTinyProb = 1e-300;

/// Sensors sharing a quantizer and gain contribute to the likelihood only
/// through their codeword counts; collapsing them makes the MLE cost
/// independent of the network size for homogeneous networks.
struct SensorGroup {
    const SensorSpec* rep = nullptr;
    std::vector<double> counts;
};

std::vector<SensorGroup> group_reports(std::span<const SensorSpec> sensors,
                                       std::span<const Codeword> reports) {
    if (sensors.size() != reports.size())
        throw std::invalid_argument("detectors: reports/sensors size mismatch");
    std::vector<SensorGroup> groups;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const SensorSpec& s = sensors[i];
        SensorGroup* g = nullptr;
        for (auto& cand : groups) {
            if (cand.rep->gain2 == s.gain2 && cand.rep->thresholds == s.thresholds) {
                g = &cand;
                break;
            }
        }
        if (!g) {
            groups.push_back(SensorGroup{&s, std::vector<double>(
                                                 static_cast<std::size_t>(s.codeword_count()), 0.0)});
            g = &groups.back();
        }
        const int j = reports[i].index;
        if (j < 1 || j > s.codeword_count())
            throw std::invalid_argument("detectors: report codeword out of range");
        g->counts[static_cast<std::size_t>(j - 1)] += 1.0;
    }
    return groups;
}

double mixture_log_likelihood(const std::vector<SensorGroup>& groups,
                              const SignalModel& model, double p, double x) {
    double ll = 0.0;
    for (const auto& g : groups) {
        const CodewordDistribution honest =
            honest_codeword_pmf(with_sparsity(model, p), *g.rep, Hypothesis::H1);
        const CodewordDistribution mix = mixture_codeword_pmf_x(honest, x);
        for (int j = 0; j < mix.size(); ++j) {
            const double n = g.counts[static_cast<std::size_t>(j)];
            if (n > 0.0) ll += n * std::log(std::max(mix[j], kTinyProb));
        }
    }
    return ll;
}

/// Boundary terms tau * pdf(tau / beta); infinite thresholds contribute zero.
double edge_term(double tau, double beta) {
    if (std::isinf(tau)) return 0.0;
    return tau * normal_pdf(tau / beta);
}

/// d A_{i,j,1} / dp at sparsity `p` for every codeword of one sensor.
std::vector<double> honest_pmf_derivative(const SignalModel& model,
                                          const SensorSpec& sensor, double p) {
    const SignalModel at_p = with_sparsity(model, p);
    const double beta = beta_h(at_p, sensor, Hypothesis::H1);
    const double scale = model.sigma_x2 * sensor.gain2 / (2.0 * beta * beta * beta);
    const auto& t = sensor.thresholds;
    std::vector<double> deriv(t.size() - 1);
    for (std::size_t j = 1; j < t.size(); ++j)
        deriv[j - 1] = scale * (edge_term(t[j - 1], beta) - edge_term(t[j], beta));
    return deriv;
}

std::vector<CodewordDistribution> honest_pmfs(const SignalModel& model,
                                              std::span<const SensorSpec> sensors,
                                              Hypothesis h) {
    std::vector<CodewordDistribution> pmfs;
    pmfs.reserve(sensors.size());
    for (const auto& s : sensors) pmfs.push_back(honest_codeword_pmf(model, s, h));
    return pmfs;
}

/// Threshold from the detector's own H0 model at the target false alarm.
double calibrated_threshold(const FusionWeights& weights,
                            const std::vector<CodewordDistribution>& model_pmfs_h0,
                            double target_pfa) {
    const StatisticMoments m =
        statistic_moments(weights.rows, model_pmfs_h0, model_pmfs_h0);
    return adaptive_threshold(m, target_pfa).threshold;
}

}  // namespace

double weighted_statistic(std::span<const Codeword> reports, const FusionWeights& weights) {
    if (reports.size() != weights.rows.size())
        throw std::invalid_argument("weighted_statistic: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& row = weights.rows[i];
        const int j = reports[i].index;
        if (j < 1 || j > static_cast<int>(row.size()))
            throw std::invalid_argument("weighted_statistic: report codeword out of range");
        const double w = row[static_cast<std::size_t>(j - 1)];
        if (std::isnan(w))
            throw std::runtime_error("weighted_statistic: report hit a zero-probability cell");
        sum += w;
    }
    return sum;
}

double attack_estimate_from_counts(long long anchor_count, long long total) {
    if (total < 1)
        throw std::invalid_argument("estimate_attack_parameter: empty report set");
    const double x_hat = 1.0 - static_cast<double>(anchor_count) / static_cast<double>(total);
    return std::clamp(x_hat, 0.0, 1.0);
}

double estimate_attack_parameter(std::span<const Codeword> reference_reports, int q_bits,
                                 int anchor) {
    const int target = anchor > 0 ? anchor : (1 << q_bits);
    long long hits = 0;
    for (const Codeword& c : reference_reports)
        if (c.index == target) ++hits;
    return attack_estimate_from_counts(hits, static_cast<long long>(reference_reports.size()));
}

double estimate_sparsity(std::span<const Codeword> reports,
                         std::span<const SensorSpec> sensors, const SignalModel& model,
                         double x, const MleOptions& opt) {
    const auto groups = group_reports(sensors, reports);
    const auto objective = [&](double p) { return mixture_log_likelihood(groups, model, p, x); };
    const ScalarMaximum fit =
        maximize_scalar(objective, Interval{0.0, opt.p_max}, opt.p_tol);
    // Monotone-decreasing likelihoods should land exactly on the p = 0
    // boundary rather than a tolerance away from it.
    if (objective(0.0) >= fit.max) return 0.0;
    return fit.argmax;
}

FusionWeights lrt_weights(const SignalModel& model_true,
                          std::span<const SensorSpec> sensors,
                          const AttackParams& attack_true) {
    FusionWeights w;
    w.rows.reserve(sensors.size());
    for (const auto& s : sensors) {
        const CodewordDistribution m1 = mixture_codeword_pmf(
            honest_codeword_pmf(model_true, s, Hypothesis::H1), attack_true);
        const CodewordDistribution m0 = mixture_codeword_pmf(
            honest_codeword_pmf(model_true, s, Hypothesis::H0), attack_true);
        std::vector<double> row(static_cast<std::size_t>(m1.size()));
        for (int j = 0; j < m1.size(); ++j) {
            if (m1[j] <= 0.0 || m0[j] <= 0.0)
                row[static_cast<std::size_t>(j)] = std::numeric_limits<double>::quiet_NaN();
            else
                row[static_cast<std::size_t>(j)] = std::log(m1[j] / m0[j]);
        }
        w.rows.push_back(std::move(row));
    }
    return w;
}

double lrt_statistic(std::span<const Codeword> reports, const SignalModel& model_true,
                     std::span<const SensorSpec> sensors, const AttackParams& attack_true) {
    return weighted_statistic(reports, lrt_weights(model_true, sensors, attack_true));
}

FusionWeights glrt_weights(const SignalModel& model, std::span<const SensorSpec> sensors,
                           double p_hat) {
    FusionWeights w;
    w.rows.reserve(sensors.size());
    const SignalModel fitted = with_sparsity(model, p_hat);
    for (const auto& s : sensors) {
        const CodewordDistribution a1 = honest_codeword_pmf(fitted, s, Hypothesis::H1);
        const CodewordDistribution a0 = honest_codeword_pmf(fitted, s, Hypothesis::H0);
        std::vector<double> row(static_cast<std::size_t>(a1.size()));
        for (int j = 0; j < a1.size(); ++j) row[static_cast<std::size_t>(j)] = a1[j] - a0[j];
        w.rows.push_back(std::move(row));
    }
    return w;
}

DetectorVerdict glrt_decide(std::span<const Codeword> reports, const SignalModel& model,
                            std::span<const SensorSpec> sensors, double threshold,
                            const MleOptions& opt) {
    const double p_hat = estimate_sparsity(reports, sensors, model, 0.0, opt);
    const FusionWeights w = glrt_weights(model, sensors, p_hat);
    DetectorVerdict v;
    v.statistic = weighted_statistic(reports, w);
    v.threshold = threshold;
    v.decide_h1 = v.statistic > v.threshold;
    v.p_hat = p_hat;
    return v;
}

DetectorVerdict glrt_decide_adaptive(std::span<const Codeword> reports,
                                     const SignalModel& model,
                                     std::span<const SensorSpec> sensors,
                                     double target_pfa, const MleOptions& opt) {
    const double p_hat = estimate_sparsity(reports, sensors, model, 0.0, opt);
    const FusionWeights w = glrt_weights(model, sensors, p_hat);
    const auto pmfs_h0 = honest_pmfs(model, sensors, Hypothesis::H0);
    DetectorVerdict v;
    v.statistic = weighted_statistic(reports, w);
    v.threshold = calibrated_threshold(w, pmfs_h0, target_pfa);
    v.decide_h1 = v.statistic > v.threshold;
    v.p_hat = p_hat;
    return v;
}

FusionWeights lmpt_weights(const SignalModel& model, std::span<const SensorSpec> sensors,
                           double at_p) {
    FusionWeights w;
    w.rows.reserve(sensors.size());
    const SignalModel at = with_sparsity(model, at_p);
    for (const auto& s : sensors) {
        const std::vector<double> deriv = honest_pmf_derivative(model, s, at_p);
        const CodewordDistribution a = honest_codeword_pmf(at, s, Hypothesis::H1);
        std::vector<double> row(deriv.size());
        for (std::size_t j = 0; j < deriv.size(); ++j) {
            if (s.gain2 == 0.0) {
                row[j] = 0.0;  // signal never enters; derivative is identically zero
                continue;
            }
            if (a[static_cast<int>(j)] <= 0.0)
                throw std::runtime_error("lmpt_weights: vanishing cell probability");
            row[j] = deriv[j] / a[static_cast<int>(j)];
        }
        w.rows.push_back(std::move(row));
    }
    return w;
}

DetectorVerdict lmpt_decide(std::span<const Codeword> reports,
                            const FusionWeights& weights, double threshold) {
    DetectorVerdict v;
    v.statistic = weighted_statistic(reports, weights);
    v.threshold = threshold;
    v.decide_h1 = v.statistic > v.threshold;
    return v;
}

namespace {

/// F_{i,j} = f_{i,j,1} - f_{i,j,0}: estimated mixture pmfs under each
/// hypothesis at (p_hat, x_hat).  Also returns the H0 model pmfs used for
/// threshold calibration.
struct RsModel {
    FusionWeights weights;
    std::vector<CodewordDistribution> model_pmfs_h0;
};

RsModel glrtrs_model(const SignalModel& model, std::span<const SensorSpec> sensors,
                     double p_hat, double x_hat) {
    RsModel out;
    out.weights.rows.reserve(sensors.size());
    out.model_pmfs_h0.reserve(sensors.size());
    const SignalModel fitted = with_sparsity(model, p_hat);
    for (const auto& s : sensors) {
        const CodewordDistribution f1 =
            mixture_codeword_pmf_x(honest_codeword_pmf(fitted, s, Hypothesis::H1), x_hat);
        const CodewordDistribution f0 =
            mixture_codeword_pmf_x(honest_codeword_pmf(fitted, s, Hypothesis::H0), x_hat);
        std::vector<double> row(static_cast<std::size_t>(f1.size()));
        for (int j = 0; j < f1.size(); ++j) row[static_cast<std::size_t>(j)] = f1[j] - f0[j];
        out.weights.rows.push_back(std::move(row));
        out.model_pmfs_h0.push_back(f0);
    }
    return out;
}

}  // namespace

DetectorVerdict glrtrs_decide_with_x(std::span<const Codeword> regular_reports,
                                     std::span<const SensorSpec> regular_sensors,
                                     double x_hat, const SignalModel& model,
                                     double target_pfa, const RsOptions& opt) {
    const double p_hat = estimate_sparsity(regular_reports, regular_sensors, model, x_hat,
                                           MleOptions{opt.p_max, opt.p_tol});
    const RsModel rs = glrtrs_model(model, regular_sensors, p_hat, x_hat);
    DetectorVerdict v;
    v.statistic = weighted_statistic(regular_reports, rs.weights);
    v.threshold = calibrated_threshold(rs.weights, rs.model_pmfs_h0, target_pfa);
    v.decide_h1 = v.statistic > v.threshold;
    v.p_hat = p_hat;
    v.x_hat = x_hat;
    return v;
}

DetectorVerdict glrtrs_decide(std::span<const Codeword> regular_reports,
                              std::span<const SensorSpec> regular_sensors,
                              std::span<const Codeword> reference_reports,
                              int reference_q_bits, const SignalModel& model,
                              double target_pfa, const RsOptions& opt) {
    const double x_hat =
        estimate_attack_parameter(reference_reports, reference_q_bits, opt.anchor);
    return glrtrs_decide_with_x(regular_reports, regular_sensors, x_hat, model, target_pfa,
                                opt);
}

FusionWeights lmptrs_weights(const SignalModel& model,
                             std::span<const SensorSpec> sensors, double x_hat) {
    FusionWeights w;
    w.rows.reserve(sensors.size());
    const SignalModel at0 = with_sparsity(model, 0.0);
    for (const auto& s : sensors) {
        const std::vector<double> deriv = honest_pmf_derivative(model, s, 0.0);
        const CodewordDistribution a = honest_codeword_pmf(at0, s, Hypothesis::H1);
        const double close = 1.0 + 1.0 / (s.codeword_count() - 1);
        std::vector<double> row(deriv.size());
        for (std::size_t j = 0; j < deriv.size(); ++j) {
            if (s.gain2 == 0.0) {
                row[j] = 0.0;
                continue;
            }
            const double cell = a[static_cast<int>(j)];
            const double mix = cell + x_hat * (close - 1.0 - cell * close);
            if (mix <= 0.0)
                throw std::runtime_error("lmptrs_weights: nonpositive mixture cell");
            row[j] = deriv[j] * (1.0 - x_hat * close) / mix;
        }
        w.rows.push_back(std::move(row));
    }
    return w;
}

DetectorVerdict lmptrs_decide_with_x(std::span<const Codeword> regular_reports,
                                     std::span<const SensorSpec> regular_sensors,
                                     double x_hat, const SignalModel& model,
                                     double target_pfa, const RsOptions&) {
    const FusionWeights w = lmptrs_weights(model, regular_sensors, x_hat);
    std::vector<CodewordDistribution> model_pmfs_h0;
    model_pmfs_h0.reserve(regular_sensors.size());
    for (const auto& s : regular_sensors)
        model_pmfs_h0.push_back(
            mixture_codeword_pmf_x(honest_codeword_pmf(model, s, Hypothesis::H0), x_hat));
    DetectorVerdict v;
    v.statistic = weighted_statistic(regular_reports, w);
    v.threshold = calibrated_threshold(w, model_pmfs_h0, target_pfa);
    v.decide_h1 = v.statistic > v.threshold;
    v.x_hat = x_hat;
    return v;
}

DetectorVerdict lmptrs_decide(std::span<const Codeword> regular_reports,
                              std::span<const SensorSpec> regular_sensors,
                              std::span<const Codeword> reference_reports,
                              int reference_q_bits, const SignalModel& model,
                              double target_pfa, const RsOptions& opt) {
    const double x_hat =
        estimate_attack_parameter(reference_reports, reference_q_bits, opt.anchor);
    return lmptrs_decide_with_x(regular_reports, regular_sensors, x_hat, model, target_pfa,
                                opt);
}

// ---------------------------------------------------------------------------
// Enhanced detectors
// ---------------------------------------------------------------------------

void ReputationState::init(int n_sensors, int codeword_count, double alpha0) {
    counts.assign(static_cast<std::size_t>(n_sensors),
                  std::vector<double>(static_cast<std::size_t>(codeword_count), 0.0));
    t = 0;
    alpha_t = alpha0;
    flagged_ever.assign(static_cast<std::size_t>(n_sensors), false);
}

void ReputationState::record(std::span<const Codeword> reports) {
    if (reports.size() != counts.size())
        throw std::invalid_argument("ReputationState: report count mismatch");
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const int j = reports[i].index;
        if (j < 1 || j > static_cast<int>(counts[i].size()))
            throw std::invalid_argument("ReputationState: codeword out of range");
        counts[i][static_cast<std::size_t>(j - 1)] += 1.0;
    }
    ++t;
}

std::vector<bool> reputation_filter(const ReputationState& state,
                                    std::span<const CodewordDistribution> honest_pmfs_h0,
                                    std::span<const CodewordDistribution> honest_pmfs_h1,
                                    double tau) {
    if (state.t < 1) throw std::invalid_argument("reputation_filter: no history yet");
    if (!(tau > 0.0)) throw std::invalid_argument("reputation_filter: tau must be positive");
    if (honest_pmfs_h0.size() != state.counts.size() ||
        honest_pmfs_h1.size() != state.counts.size())
        throw std::invalid_argument("reputation_filter: pmf count mismatch");

    std::vector<bool> keep(state.counts.size());
    const double inv_t = 1.0 / static_cast<double>(state.t);
    for (std::size_t i = 0; i < state.counts.size(); ++i) {
        double deviation = 0.0;
        for (std::size_t j = 0; j < state.counts[i].size(); ++j) {
            const int jj = static_cast<int>(j);
            const double benchmark = std::min(honest_pmfs_h0[i][jj], honest_pmfs_h1[i][jj]);
            deviation += std::abs(benchmark - state.counts[i][j] * inv_t);
        }
        keep[i] = deviation <= tau;
    }
    return keep;
}

void EnhancedState::init(int n_regular, int codeword_count, double alpha_known) {
    reputation.init(n_regular, codeword_count, alpha_known);
    ref_anchor_count = 0;
    ref_total = 0;
}

DetectorVerdict enhanced_decide(std::span<const Codeword> regular_reports,
                                std::span<const SensorSpec> regular_sensors,
                                std::span<const Codeword> reference_reports_step,
                                int reference_q_bits, const SignalModel& model,
                                RsDetectorKind base, double alpha_known,
                                double target_pfa, EnhancedState& state,
                                const EnhancedOptions& opt) {
    if (!(alpha_known >= 0.0 && alpha_known <= 1.0))
        throw std::invalid_argument("enhanced_decide: alpha_known must lie in [0,1]");

    state.reputation.record(regular_reports);
    const int anchor = opt.rs.anchor > 0 ? opt.rs.anchor : (1 << reference_q_bits);
    for (const Codeword& c : reference_reports_step)
        if (c.index == anchor) ++state.ref_anchor_count;
    state.ref_total += static_cast<long long>(reference_reports_step.size());

    const double x_ref = attack_estimate_from_counts(state.ref_anchor_count, state.ref_total);
    if (alpha_known == 0.0 && x_ref > 0.0)
        throw std::runtime_error("enhanced_decide: inconsistent prior (alpha = 0, x > 0)");

    // Benchmark pmfs for the deviation filter; the H1 side uses the current
    // sparsity estimate on the GLRT path and a nominal value on the LMPT path.
    const double p_bench = base == RsDetectorKind::Glrtrs
                               ? estimate_sparsity(regular_reports, regular_sensors, model,
                                                   x_ref, MleOptions{opt.rs.p_max, opt.rs.p_tol})
                               : opt.nominal_p;
    const auto pmfs_h0 = honest_pmfs(model, regular_sensors, Hypothesis::H0);
    const auto pmfs_h1 =
        honest_pmfs(with_sparsity(model, p_bench), regular_sensors, Hypothesis::H1);

    const double tau_eff =
        opt.filter_tau + opt.filter_slack / std::sqrt(static_cast<double>(state.reputation.t));
    const std::vector<bool> keep_now =
        reputation_filter(state.reputation, pmfs_h0, pmfs_h1, tau_eff);
    for (std::size_t i = 0; i < keep_now.size(); ++i)
        if (!keep_now[i]) state.reputation.flagged_ever[i] = true;

    long long flagged = 0;
    for (bool f : state.reputation.flagged_ever)
        if (f) ++flagged;
    const double alpha_t =
        std::max(0.0, alpha_known - static_cast<double>(flagged) /
                                        static_cast<double>(regular_sensors.size()));
    state.reputation.alpha_t = alpha_t;
    // x_eff = (x_ref / alpha) * alpha_t, arranged so that the no-flag case
    // reproduces x_ref exactly.
    const double x_eff = alpha_known > 0.0 ? x_ref * (alpha_t / alpha_known) : 0.0;

    std::vector<Codeword> kept_reports;
    std::vector<SensorSpec> kept_sensors;
    std::vector<bool> keep_mask(regular_sensors.size());
    kept_reports.reserve(regular_sensors.size());
    kept_sensors.reserve(regular_sensors.size());
    for (std::size_t i = 0; i < regular_sensors.size(); ++i) {
        const bool kept = !state.reputation.flagged_ever[i];
        keep_mask[i] = kept;
        if (kept) {
            kept_reports.push_back(regular_reports[i]);
            kept_sensors.push_back(regular_sensors[i]);
        }
    }

    DetectorVerdict v;
    if (kept_sensors.empty()) {
        v.threshold = 0.0;  // everyone filtered: no evidence, decide H0
    } else if (base == RsDetectorKind::Glrtrs) {
        v = glrtrs_decide_with_x(kept_reports, kept_sensors, x_eff, model, target_pfa,
                                 opt.rs);
    } else {
        v = lmptrs_decide_with_x(kept_reports, kept_sensors, x_eff, model, target_pfa,
                                 opt.rs);
    }
    v.x_hat = x_eff;
    v.keep_mask = std::move(keep_mask);
    return v;
}

}  // namespace byzdet
