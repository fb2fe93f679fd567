#include "byzdet/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "byzdet/numerics.hpp"

namespace byzdet {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string current;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!trim(current).empty()) out.push_back(trim(current));
    return out;
}

std::uint64_t hash_coordinate(const Coordinate& c) {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(c.n_sensors));
    mix(static_cast<std::uint64_t>(c.n_reference));
    mix(static_cast<std::uint64_t>(c.q_bits));
    std::uint64_t bits;
    std::memcpy(&bits, &c.alpha, sizeof(bits));
    mix(bits);
    std::memcpy(&bits, &c.p_attack, sizeof(bits));
    mix(bits);
    return h;
}

}  // namespace

std::string DetectorSelection::label() const {
    std::string name;
    switch (kind) {
        case DetectorKind::Lrt: name = "lrt"; break;
        case DetectorKind::Glrt: name = "glrt"; break;
        case DetectorKind::Lmpt: name = "lmpt"; break;
        case DetectorKind::Glrtrs: name = "glrtrs"; break;
        case DetectorKind::Lmptrs: name = "lmptrs"; break;
        case DetectorKind::EGlrtrs: name = "e-glrtrs"; break;
        case DetectorKind::ELmptrs: name = "e-lmptrs"; break;
    }
    if (filter_tau) name += "(tau=" + format_double(*filter_tau) + ")";
    return name;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.networks.empty()) throw std::invalid_argument("config: no networks");
    for (auto [n, nref] : cfg.networks)
        if (!(0 < nref && nref < n))
            throw std::invalid_argument("config: need 0 < n_reference < n_sensors");
    if (cfg.q_bits.empty()) throw std::invalid_argument("config: no quantizer sizes");
    for (int q : cfg.q_bits)
        if (q < 1 || q > 8) throw std::invalid_argument("config: q_bits must lie in [1,8]");
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.time_steps < 1) throw std::invalid_argument("config: time_steps must be >= 1");
    if (cfg.detectors.empty()) throw std::invalid_argument("config: no detectors selected");
    if (!(cfg.target_pfa > 0.0 && cfg.target_pfa < 1.0))
        throw std::invalid_argument("config: target_pfa must lie in (0,1)");
    if (!(cfg.model.sparsity >= 0.0 && cfg.model.sparsity <= 1.0))
        throw std::invalid_argument("config: sparsity must lie in [0,1]");
    if (!(cfg.model.sigma_x2 > 0.0 && cfg.model.sigma_n2 > 0.0))
        throw std::invalid_argument("config: variances must be positive");
    if (cfg.model.dimension < 1)
        throw std::invalid_argument("config: signal dimension must be >= 1");
    for (auto [alpha, pa] : cfg.attacks)
        if (!(alpha >= 0.0 && alpha <= 1.0 && pa >= 0.0 && pa <= 1.0))
            throw std::invalid_argument("config: attack parameters must lie in [0,1]");
    if (!(std::abs(cfg.prior_h0 + cfg.prior_h1 - 1.0) <= 1e-12))
        throw std::invalid_argument("config: priors must sum to one");
    if (cfg.threshold_scheme == ThresholdScheme::Explicit)
        for (int q : cfg.q_bits) {
            const auto it = cfg.explicit_thresholds.find(q);
            if (it == cfg.explicit_thresholds.end())
                throw std::invalid_argument("config: missing thresholds_q" + std::to_string(q));
            if (static_cast<int>(it->second.size()) != (1 << q) - 1)
                throw std::invalid_argument("config: thresholds_q" + std::to_string(q) +
                                            " needs 2^q - 1 interior entries");
        }
    if (cfg.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (!(cfg.reference_offset > 0.0))
        throw std::invalid_argument("config: reference_offset must be positive");
}

NetworkViews build_network(const ExperimentConfig& cfg, const Coordinate& coord) {
    std::vector<double> interior;
    if (cfg.threshold_scheme == ThresholdScheme::Explicit)
        interior = cfg.explicit_thresholds.at(coord.q_bits);
    else
        interior = equiprobable_h0_thresholds(coord.q_bits, cfg.model.sigma_n2);
    const std::vector<double> regular_ladder = make_threshold_ladder(interior);

    SensorSpec regular_base;
    regular_base.gain2 = cfg.gain2;
    regular_base.thresholds = regular_ladder;
    validate_sensor(regular_base);

    const std::vector<double> reference_ladder =
        make_reference_thresholds(regular_base, cfg.reference_offset, cfg.reference_mirror);

    NetworkViews net;
    net.rs_view.reserve(static_cast<std::size_t>(coord.n_sensors));
    net.baseline_view.reserve(static_cast<std::size_t>(coord.n_sensors));
    for (int i = 0; i < coord.n_sensors; ++i) {
        SensorSpec s = regular_base;
        s.id = i;
        if (i < coord.n_reference) {
            s.is_reference = true;
            s.thresholds = reference_ladder;
        }
        net.rs_view.push_back(s);
        SensorSpec b = regular_base;
        b.id = i;
        net.baseline_view.push_back(b);
    }
    net.anchor = reference_anchor_codeword(net.rs_view.front());
    return net;
}

// ---------------------------------------------------------------------------
// Analytic predictions
// ---------------------------------------------------------------------------

namespace {

std::vector<CodewordDistribution> honest_view_pmfs(const SignalModel& model,
                                                   std::span<const SensorSpec> sensors,
                                                   Hypothesis h) {
    std::vector<CodewordDistribution> pmfs;
    pmfs.reserve(sensors.size());
    for (const auto& s : sensors) pmfs.push_back(honest_codeword_pmf(model, s, h));
    return pmfs;
}

std::vector<CodewordDistribution> attacked_pmfs(
    const std::vector<CodewordDistribution>& honest, const AttackParams& attack) {
    std::vector<CodewordDistribution> out;
    out.reserve(honest.size());
    for (const auto& pmf : honest) out.push_back(mixture_codeword_pmf(pmf, attack));
    return out;
}

struct CellStats {
    double mean = 0.0;
    double var = 0.0;
};

CellStats row_stats(const CodewordDistribution& pmf, const std::vector<double>& w) {
    CellStats s;
    double second = 0.0;
    for (int j = 0; j < pmf.size(); ++j) {
        s.mean += pmf[j] * w[static_cast<std::size_t>(j)];
        second += pmf[j] * w[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)];
    }
    s.var = std::max(0.0, second - s.mean * s.mean);
    return s;
}

/// Variance of the reference attack estimate after `steps` accumulated steps.
double xhat_stddev(const Coordinate& coord, int steps) {
    const double x = coord.alpha * coord.p_attack;
    const double n = static_cast<double>(coord.n_reference) * steps;
    return std::sqrt(std::max(0.0, x * (1.0 - x)) / n);
}

/// Gaussian smearing of a tail probability by a N(0, s^2) threshold jitter:
/// E[Q(z - s Z)] = Q(z / sqrt(1 + s^2)).
double smear_tail(double z, double s) { return q_tail(z / std::sqrt(1.0 + s * s)); }

/// Sensitivity of the calibrated-vs-true mean gap to an error in the attack
/// estimate: sum_ij d(mixture_h0)/dx * w_ij.
double attack_sensitivity(const std::vector<CodewordDistribution>& honest_h0,
                          const FusionWeights& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < honest_h0.size(); ++i) {
        const auto& pmf = honest_h0[i];
        const double close = 1.0 + 1.0 / (pmf.size() - 1);
        for (int j = 0; j < pmf.size(); ++j)
            s += (close - 1.0 - pmf[j] * close) * w.rows[i][static_cast<std::size_t>(j)];
    }
    return s;
}

FusionWeights rs_weight_family(const SignalModel& model, std::span<const SensorSpec> sensors,
                               DetectorKind kind, double p, double x) {
    if (kind == DetectorKind::Glrtrs || kind == DetectorKind::EGlrtrs) {
        FusionWeights w;
        w.rows.reserve(sensors.size());
        const SignalModel fitted = with_sparsity(model, p);
        for (const auto& s : sensors) {
            const CodewordDistribution f1 =
                mixture_codeword_pmf_x(honest_codeword_pmf(fitted, s, Hypothesis::H1), x);
            const CodewordDistribution f0 =
                mixture_codeword_pmf_x(honest_codeword_pmf(fitted, s, Hypothesis::H0), x);
            std::vector<double> row(static_cast<std::size_t>(f1.size()));
            for (int j = 0; j < f1.size(); ++j)
                row[static_cast<std::size_t>(j)] = f1[j] - f0[j];
            w.rows.push_back(std::move(row));
        }
        return w;
    }
    return lmptrs_weights(model, sensors, x);
}

AnalyticPrediction from_point(const PerformancePoint& p) {
    return AnalyticPrediction{p.pe, p.pd, p.pf};
}

AnalyticPrediction predict_baseline(const ExperimentConfig& cfg, const Coordinate& coord,
                                    const NetworkViews& net, DetectorKind kind) {
    const AttackParams attack{coord.alpha, coord.p_attack};
    const auto honest_h0 = honest_view_pmfs(cfg.model, net.baseline_view, Hypothesis::H0);
    const auto honest_h1 = honest_view_pmfs(cfg.model, net.baseline_view, Hypothesis::H1);
    const auto true_h0 = attacked_pmfs(honest_h0, attack);
    const auto true_h1 = attacked_pmfs(honest_h1, attack);

    FusionWeights w;
    double threshold = 0.0;
    if (kind == DetectorKind::Lrt) {
        w = lrt_weights(cfg.model, net.baseline_view, attack);
        const StatisticMoments m = statistic_moments(w.rows, true_h0, true_h1);
        threshold = adaptive_threshold(m, cfg.target_pfa).threshold;
        return from_point(predict_performance(m, threshold, cfg.prior_h0, cfg.prior_h1));
    }
    if (kind == DetectorKind::Glrt)
        w = glrt_weights(cfg.model, net.baseline_view, cfg.model.sparsity);
    else
        w = lmpt_weights(cfg.model, net.baseline_view, 0.0);
    // Attack-free designs calibrate on their own honest model...
    const StatisticMoments believed = statistic_moments(w.rows, honest_h0, honest_h1);
    threshold = adaptive_threshold(believed, cfg.target_pfa).threshold;
    // ...but live under the attacked mixture.
    const StatisticMoments actual = statistic_moments(w.rows, true_h0, true_h1);
    return from_point(predict_performance(actual, threshold, cfg.prior_h0, cfg.prior_h1));
}

AnalyticPrediction predict_rs(const ExperimentConfig& cfg, const Coordinate& coord,
                              const NetworkViews& net, DetectorKind kind, int step) {
    const AttackParams attack{coord.alpha, coord.p_attack};
    const double x = attack.x();
    const std::span<const SensorSpec> regular(net.rs_view.data() + coord.n_reference,
                                              net.rs_view.size() -
                                                  static_cast<std::size_t>(coord.n_reference));
    const auto honest_h0 = honest_view_pmfs(cfg.model, regular, Hypothesis::H0);
    const auto honest_h1 = honest_view_pmfs(cfg.model, regular, Hypothesis::H1);
    const auto true_h0 = attacked_pmfs(honest_h0, attack);
    const auto true_h1 = attacked_pmfs(honest_h1, attack);

    const FusionWeights w = rs_weight_family(cfg.model, regular, kind, cfg.model.sparsity, x);
    const StatisticMoments m = statistic_moments(w.rows, true_h0, true_h1);
    const double threshold = adaptive_threshold(m, cfg.target_pfa).threshold;

    // Fold the reference-estimate noise into the tails: an error in x shifts
    // the calibrated threshold relative to the true mean.
    const double sens = attack_sensitivity(honest_h0, w);
    const double sd = xhat_stddev(coord, step);
    const double s0 = m.var_h0 > 0.0 ? sens * sd / std::sqrt(m.var_h0) : 0.0;
    const double s1 = m.var_h1 > 0.0 ? sens * sd / std::sqrt(m.var_h1) : 0.0;

    AnalyticPrediction out;
    out.pf = m.var_h0 > 0.0
                 ? smear_tail((threshold - m.mean_h0) / std::sqrt(m.var_h0), s0)
                 : (m.mean_h0 > threshold ? 1.0 : 0.0);
    out.pd = m.var_h1 > 0.0
                 ? smear_tail((threshold - m.mean_h1) / std::sqrt(m.var_h1), s1)
                 : (m.mean_h1 > threshold ? 1.0 : 0.0);
    out.pe = cfg.prior_h0 * out.pf + cfg.prior_h1 * (1.0 - out.pd);
    return out;
}

AnalyticPrediction predict_enhanced(const ExperimentConfig& cfg, const Coordinate& coord,
                                    const NetworkViews& net, const DetectorSelection& sel,
                                    int step) {
    const AttackParams attack{coord.alpha, coord.p_attack};
    const double x = attack.x();
    const std::span<const SensorSpec> regular(net.rs_view.data() + coord.n_reference,
                                              net.rs_view.size() -
                                                  static_cast<std::size_t>(coord.n_reference));
    const double n_reg = static_cast<double>(regular.size());
    const double tau = sel.filter_tau.value_or(cfg.filter_tau);
    const double tau_eff = tau + cfg.filter_slack / std::sqrt(static_cast<double>(step));
    const double bench_p = sel.kind == DetectorKind::EGlrtrs ? cfg.model.sparsity : cfg.nominal_p;

    // Steady-state filter outcome per hypothesis branch: a sensor is kept
    // when its limiting empirical pmf sits within tau_eff of the benchmark.
    const SignalModel bench_model = with_sparsity(cfg.model, bench_p);
    AnalyticPrediction out;
    double tails[2] = {0.0, 0.0};
    for (int h = 0; h < 2; ++h) {
        const Hypothesis hyp = h == 0 ? Hypothesis::H0 : Hypothesis::H1;
        std::vector<bool> keep_hon(regular.size()), keep_byz(regular.size());
        double flagged = 0.0;
        for (std::size_t i = 0; i < regular.size(); ++i) {
            const CodewordDistribution honest = honest_codeword_pmf(cfg.model, regular[i], hyp);
            const CodewordDistribution byz = byzantine_codeword_pmf(honest, coord.p_attack);
            const CodewordDistribution bench_h1 =
                honest_codeword_pmf(bench_model, regular[i], Hypothesis::H1);
            const CodewordDistribution bench_h0 =
                honest_codeword_pmf(cfg.model, regular[i], Hypothesis::H0);
            double dev_hon = 0.0, dev_byz = 0.0;
            for (int j = 0; j < honest.size(); ++j) {
                const double r = std::min(bench_h0[j], bench_h1[j]);
                dev_hon += std::abs(r - honest[j]);
                dev_byz += std::abs(r - byz[j]);
            }
            keep_hon[i] = dev_hon <= tau_eff;
            keep_byz[i] = dev_byz <= tau_eff;
            if (!keep_hon[i]) flagged += 1.0 - coord.alpha;
            if (!keep_byz[i]) flagged += coord.alpha;
        }

        const double alpha_t = std::max(0.0, coord.alpha - flagged / n_reg);
        const double x_eff = coord.alpha > 0.0 ? x * (alpha_t / coord.alpha) : 0.0;
        const DetectorKind base = sel.kind == DetectorKind::EGlrtrs ? DetectorKind::Glrtrs
                                                                    : DetectorKind::Lmptrs;
        const FusionWeights w =
            rs_weight_family(cfg.model, regular, base, cfg.model.sparsity, x_eff);

        // Expected moments over the kept population: each sensor is honest
        // with weight 1 - alpha and Byzantine with weight alpha.
        double mean_true = 0.0, var_true = 0.0, mean_model = 0.0, var_model = 0.0;
        for (std::size_t i = 0; i < regular.size(); ++i) {
            const CodewordDistribution honest = honest_codeword_pmf(cfg.model, regular[i], hyp);
            const CodewordDistribution byz = byzantine_codeword_pmf(honest, coord.p_attack);
            const CodewordDistribution model_h0 = mixture_codeword_pmf_x(
                honest_codeword_pmf(cfg.model, regular[i], Hypothesis::H0), x_eff);
            const double w_hon = keep_hon[i] ? 1.0 - coord.alpha : 0.0;
            const double w_byz = keep_byz[i] ? coord.alpha : 0.0;
            const CellStats hon = row_stats(honest, w.rows[i]);
            const CellStats bz = row_stats(byz, w.rows[i]);
            const CellStats mdl = row_stats(model_h0, w.rows[i]);
            mean_true += w_hon * hon.mean + w_byz * bz.mean;
            var_true += w_hon * hon.var + w_byz * bz.var;
            mean_model += (w_hon + w_byz) * mdl.mean;
            var_model += (w_hon + w_byz) * mdl.var;
        }
        const double threshold =
            q_tail_inverse(cfg.target_pfa) * std::sqrt(std::max(0.0, var_model)) + mean_model;
        tails[h] = var_true > 0.0 ? q_tail((threshold - mean_true) / std::sqrt(var_true))
                                  : (mean_true > threshold ? 1.0 : 0.0);
    }
    out.pf = tails[0];
    out.pd = tails[1];
    out.pe = cfg.prior_h0 * out.pf + cfg.prior_h1 * (1.0 - out.pd);
    return out;
}

AnalyticPrediction predict_detector_at_step(const ExperimentConfig& cfg,
                                            const Coordinate& coord,
                                            const NetworkViews& net,
                                            const DetectorSelection& sel, int step) {
    switch (sel.kind) {
        case DetectorKind::Lrt:
        case DetectorKind::Glrt:
        case DetectorKind::Lmpt:
            return predict_baseline(cfg, coord, net, sel.kind);
        case DetectorKind::Glrtrs:
        case DetectorKind::Lmptrs:
            return predict_rs(cfg, coord, net, sel.kind, step);
        case DetectorKind::EGlrtrs:
        case DetectorKind::ELmptrs:
            return predict_enhanced(cfg, coord, net, sel, step);
    }
    return {};
}

}  // namespace

AnalyticPrediction predict_detector(const ExperimentConfig& cfg, const Coordinate& coord,
                                    const DetectorSelection& sel) {
    const NetworkViews net = build_network(cfg, coord);
    return predict_detector_at_step(cfg, coord, net, sel, cfg.time_steps);
}

// ---------------------------------------------------------------------------
// Trial engine
// ---------------------------------------------------------------------------

namespace {

struct CoordEngine {
    const ExperimentConfig* cfg = nullptr;
    Coordinate coord;
    NetworkViews net;
    AttackParams attack;
    int n_byz = 0;
    std::uint64_t coord_hash = 0;
    double beta[2] = {1.0, 1.0};

    FusionWeights lrt_w;
    double lrt_threshold = 0.0;
    FusionWeights lmpt_w;
    double lmpt_threshold = 0.0;

    std::span<const SensorSpec> regular_rs() const {
        return {net.rs_view.data() + coord.n_reference,
                net.rs_view.size() - static_cast<std::size_t>(coord.n_reference)};
    }
};

CoordEngine make_engine(const ExperimentConfig& cfg, const Coordinate& coord) {
    CoordEngine eng;
    eng.cfg = &cfg;
    eng.coord = coord;
    eng.net = build_network(cfg, coord);
    eng.attack = AttackParams{coord.alpha, coord.p_attack};
    eng.n_byz = static_cast<int>(std::floor(coord.alpha * coord.n_sensors));
    eng.coord_hash = hash_coordinate(coord);
    eng.beta[0] = beta_h(cfg.model, eng.net.baseline_view.front(), Hypothesis::H0);
    eng.beta[1] = beta_h(cfg.model, eng.net.baseline_view.front(), Hypothesis::H1);

    for (const auto& sel : cfg.detectors) {
        if (sel.kind == DetectorKind::Lrt && eng.lrt_w.rows.empty()) {
            eng.lrt_w = lrt_weights(cfg.model, eng.net.baseline_view, eng.attack);
            const auto h0 = honest_view_pmfs(cfg.model, eng.net.baseline_view, Hypothesis::H0);
            const auto h1 = honest_view_pmfs(cfg.model, eng.net.baseline_view, Hypothesis::H1);
            const StatisticMoments m = statistic_moments(
                eng.lrt_w.rows, attacked_pmfs(h0, eng.attack), attacked_pmfs(h1, eng.attack));
            eng.lrt_threshold = adaptive_threshold(m, cfg.target_pfa).threshold;
        }
        if (sel.kind == DetectorKind::Lmpt && eng.lmpt_w.rows.empty()) {
            eng.lmpt_w = lmpt_weights(cfg.model, eng.net.baseline_view, 0.0);
            const auto h0 = honest_view_pmfs(cfg.model, eng.net.baseline_view, Hypothesis::H0);
            const StatisticMoments m = statistic_moments(eng.lmpt_w.rows, h0, h0);
            eng.lmpt_threshold = adaptive_threshold(m, cfg.target_pfa).threshold;
        }
    }
    return eng;
}

/// Draws the Byzantine role mask for one trial.
std::vector<bool> draw_roles(const CoordEngine& eng, RandomStream& rng) {
    const int n = eng.coord.n_sensors;
    std::vector<bool> byz(static_cast<std::size_t>(n), false);
    if (eng.cfg->roles == RoleAssignment::Deterministic) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int k = 0; k < eng.n_byz; ++k) {
            const int pick = k + rng.uniform_int(n - k);
            std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
            byz[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = true;
        }
    } else {
        for (int i = 0; i < n; ++i) byz[static_cast<std::size_t>(i)] = rng.bernoulli(eng.coord.alpha);
    }
    return byz;
}

struct StepReports {
    std::vector<Codeword> rs;        // reference thresholds for the first n_ref sensors
    std::vector<Codeword> baseline;  // all-regular quantizer view
};

void draw_step_reports(const CoordEngine& eng, Hypothesis hyp, const std::vector<bool>& byz,
                       RandomStream& rng, StepReports& out) {
    const ExperimentConfig& cfg = *eng.cfg;
    const int n = eng.coord.n_sensors;
    out.rs.resize(static_cast<std::size_t>(n));
    out.baseline.resize(static_cast<std::size_t>(n));
    const int h = hyp == Hypothesis::H1 ? 1 : 0;
    for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        double y;
        if (cfg.surrogate == Surrogate::Asymptotic)
            y = rng.normal(0.0, eng.beta[h]);
        else
            y = sample_sparse_observation(cfg.model, eng.net.baseline_view[ui], hyp, rng);
        Codeword z_rs = quantize(y, eng.net.rs_view[ui]);
        Codeword z_base = quantize(y, eng.net.baseline_view[ui]);
        if (byz[ui]) {
            // One flip decision shared across both quantizer views.
            const double flip_u = rng.uniform();
            const double pick_u = rng.uniform();
            const int cells = eng.net.rs_view[ui].codeword_count();
            z_rs = byzantine_report_from_uniforms(z_rs, eng.coord.p_attack, cells, flip_u,
                                                  pick_u);
            z_base = byzantine_report_from_uniforms(z_base, eng.coord.p_attack, cells, flip_u,
                                                    pick_u);
        }
        out.rs[ui] = z_rs;
        out.baseline[ui] = z_base;
    }
}

TrialResult run_engine_trial(const CoordEngine& eng, long trial_index) {
    const ExperimentConfig& cfg = *eng.cfg;
    const int n_det = static_cast<int>(cfg.detectors.size());
    const int steps = cfg.time_steps;

    TrialResult result;
    result.cells.assign(static_cast<std::size_t>(n_det),
                        std::vector<std::array<TrialResult::Cell, 2>>(
                            static_cast<std::size_t>(steps)));

    RandomStream role_rng(derive_seed(cfg.seed, eng.coord_hash ^ 0xB01E5ull,
                                      static_cast<std::uint64_t>(trial_index), 0));
    const std::vector<bool> roles = draw_roles(eng, role_rng);

    const std::span<const SensorSpec> regular = eng.regular_rs();
    const int n_ref = eng.coord.n_reference;
    const int ref_q = eng.coord.q_bits;
    RsOptions rs_opt;
    rs_opt.p_max = cfg.p_max;
    rs_opt.p_tol = cfg.p_tol;
    rs_opt.anchor = eng.net.anchor;

    for (int h = 0; h < 2; ++h) {
        const Hypothesis hyp = h == 0 ? Hypothesis::H0 : Hypothesis::H1;
        const std::uint64_t branch_tag =
            cfg.common_random_numbers ? 0x5AFEull : static_cast<std::uint64_t>(h);
        RandomStream obs(derive_seed(cfg.seed, eng.coord_hash,
                                     static_cast<std::uint64_t>(trial_index),
                                     0xAB5ull + branch_tag));

        // Per-branch detector state.
        long long ref_anchor = 0, ref_total = 0;
        std::vector<EnhancedState> e_states(static_cast<std::size_t>(n_det));
        for (int d = 0; d < n_det; ++d) {
            const DetectorKind k = cfg.detectors[static_cast<std::size_t>(d)].kind;
            if (k == DetectorKind::EGlrtrs || k == DetectorKind::ELmptrs)
                e_states[static_cast<std::size_t>(d)].init(
                    static_cast<int>(regular.size()), 1 << ref_q, eng.coord.alpha);
        }

        StepReports reports;
        std::vector<bool> byz = roles;
        for (int step = 0; step < steps; ++step) {
            if (cfg.roles == RoleAssignment::IidPerStep) {
                for (std::size_t i = 0; i < byz.size(); ++i)
                    byz[i] = obs.bernoulli(eng.coord.alpha);
            }
            draw_step_reports(eng, hyp, byz, obs, reports);

            const std::span<const Codeword> rs_ref(reports.rs.data(),
                                                   static_cast<std::size_t>(n_ref));
            const std::span<const Codeword> rs_regular(
                reports.rs.data() + n_ref, reports.rs.size() - static_cast<std::size_t>(n_ref));

            for (const Codeword& c : rs_ref)
                if (c.index == eng.net.anchor) ++ref_anchor;
            ref_total += n_ref;

            for (int d = 0; d < n_det; ++d) {
                const DetectorSelection& sel = cfg.detectors[static_cast<std::size_t>(d)];
                TrialResult::Cell& cell =
                    result.cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(step)]
                                [static_cast<std::size_t>(h)];
                try {
                    switch (sel.kind) {
                        case DetectorKind::Lrt: {
                            DetectorVerdict v;
                            v.statistic = weighted_statistic(reports.baseline, eng.lrt_w);
                            v.threshold = eng.lrt_threshold;
                            v.decide_h1 = v.statistic > v.threshold;
                            cell.verdict = v;
                            break;
                        }
                        case DetectorKind::Glrt:
                            cell.verdict = glrt_decide_adaptive(
                                reports.baseline, cfg.model, eng.net.baseline_view,
                                cfg.target_pfa, MleOptions{cfg.p_max, cfg.p_tol});
                            break;
                        case DetectorKind::Lmpt:
                            cell.verdict =
                                lmpt_decide(reports.baseline, eng.lmpt_w, eng.lmpt_threshold);
                            break;
                        case DetectorKind::Glrtrs: {
                            const double x_hat =
                                attack_estimate_from_counts(ref_anchor, ref_total);
                            cell.verdict = glrtrs_decide_with_x(
                                rs_regular, regular, x_hat, cfg.model, cfg.target_pfa, rs_opt);
                            break;
                        }
                        case DetectorKind::Lmptrs: {
                            const double x_hat =
                                attack_estimate_from_counts(ref_anchor, ref_total);
                            cell.verdict = lmptrs_decide_with_x(
                                rs_regular, regular, x_hat, cfg.model, cfg.target_pfa, rs_opt);
                            break;
                        }
                        case DetectorKind::EGlrtrs:
                        case DetectorKind::ELmptrs: {
                            EnhancedOptions opt;
                            opt.filter_tau = sel.filter_tau.value_or(cfg.filter_tau);
                            opt.filter_slack = cfg.filter_slack;
                            opt.nominal_p = cfg.nominal_p;
                            opt.rs = rs_opt;
                            cell.verdict = enhanced_decide(
                                rs_regular, regular, rs_ref, ref_q, cfg.model,
                                sel.kind == DetectorKind::EGlrtrs ? RsDetectorKind::Glrtrs
                                                                  : RsDetectorKind::Lmptrs,
                                eng.coord.alpha, cfg.target_pfa,
                                e_states[static_cast<std::size_t>(d)], opt);
                            break;
                        }
                    }
                } catch (const std::exception& e) {
                    cell.failed = true;
                    cell.error = e.what();
                }
            }
        }
    }
    return result;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, const Coordinate& coord,
                      long trial_index) {
    validate_config(cfg);
    const CoordEngine eng = make_engine(cfg, coord);
    return run_engine_trial(eng, trial_index);
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& cfg) {
    validate_config(cfg);
    SweepResult result;

    const int n_det = static_cast<int>(cfg.detectors.size());
    const int steps = cfg.time_steps;
    const long trials = cfg.trials;

    std::vector<Coordinate> coords;
    for (auto [n, nref] : cfg.networks)
        for (int q : cfg.q_bits)
            for (auto [alpha, pa] : cfg.attacks)
                coords.push_back(Coordinate{n, nref, q, alpha, pa});

    for (const Coordinate& coord : coords) {
        const CoordEngine eng = make_engine(cfg, coord);

        // Flat per-trial slots, reduced in trial order after the join so the
        // output is independent of the worker count.
        const std::size_t cells = static_cast<std::size_t>(n_det) * steps * 2;
        std::vector<std::vector<std::uint8_t>> decide(cells);
        std::vector<std::vector<double>> xhat(cells), phat(cells);
        std::vector<std::vector<std::uint8_t>> failed(cells);
        for (std::size_t c = 0; c < cells; ++c) {
            decide[c].assign(static_cast<std::size_t>(trials), 0);
            xhat[c].assign(static_cast<std::size_t>(trials), kNan);
            phat[c].assign(static_cast<std::size_t>(trials), kNan);
            failed[c].assign(static_cast<std::size_t>(trials), 0);
        }
        std::vector<std::string> first_error(static_cast<std::size_t>(n_det));
        std::vector<long> first_error_trial(static_cast<std::size_t>(n_det), -1);
        std::mutex error_mutex;

        const auto slot = [&](int d, int s, int h) {
            return (static_cast<std::size_t>(d) * steps + static_cast<std::size_t>(s)) * 2 +
                   static_cast<std::size_t>(h);
        };

        const auto worker = [&](long lo, long hi) {
            for (long t = lo; t < hi; ++t) {
                const TrialResult tr = run_engine_trial(eng, t);
                for (int d = 0; d < n_det; ++d)
                    for (int s = 0; s < steps; ++s)
                        for (int h = 0; h < 2; ++h) {
                            const TrialResult::Cell& cell =
                                tr.cells[static_cast<std::size_t>(d)]
                                        [static_cast<std::size_t>(s)]
                                        [static_cast<std::size_t>(h)];
                            const std::size_t c = slot(d, s, h);
                            const std::size_t ut = static_cast<std::size_t>(t);
                            decide[c][ut] = cell.verdict.decide_h1 ? 1 : 0;
                            xhat[c][ut] = cell.verdict.x_hat.value_or(kNan);
                            phat[c][ut] = cell.verdict.p_hat.value_or(kNan);
                            if (cell.failed) {
                                failed[c][ut] = 1;
                                std::lock_guard<std::mutex> lock(error_mutex);
                                auto& at = first_error_trial[static_cast<std::size_t>(d)];
                                if (at < 0 || t < at) {
                                    at = t;
                                    first_error[static_cast<std::size_t>(d)] = cell.error;
                                }
                            }
                        }
            }
        };

        const int n_workers =
            static_cast<int>(std::max<long>(1, std::min<long>(cfg.workers, trials)));
        if (n_workers == 1) {
            worker(0, trials);
        } else {
            std::vector<std::thread> pool;
            const long chunk = (trials + n_workers - 1) / n_workers;
            for (int w = 0; w < n_workers; ++w) {
                const long lo = w * chunk;
                const long hi = std::min(trials, lo + chunk);
                if (lo < hi) pool.emplace_back(worker, lo, hi);
            }
            for (auto& th : pool) th.join();
        }

        // Reduce in (detector, step) order.
        for (int d = 0; d < n_det; ++d) {
            const DetectorSelection& sel = cfg.detectors[static_cast<std::size_t>(d)];
            long long failures = 0;
            for (int s = 0; s < steps; ++s) {
                if (!cfg.record_all_steps && s != steps - 1) {
                    for (int h = 0; h < 2; ++h)
                        for (std::uint8_t f : failed[slot(d, s, h)]) failures += f;
                    continue;
                }
                long long n_fire[2] = {0, 0};
                double x_sum = 0.0, p_sum = 0.0;
                long long x_n = 0, p_n = 0;
                for (int h = 0; h < 2; ++h) {
                    const std::size_t c = slot(d, s, h);
                    for (long t = 0; t < trials; ++t) {
                        const std::size_t ut = static_cast<std::size_t>(t);
                        n_fire[h] += decide[c][ut];
                        failures += failed[c][ut];
                        if (!std::isnan(xhat[c][ut])) {
                            x_sum += xhat[c][ut];
                            ++x_n;
                        }
                        if (!std::isnan(phat[c][ut])) {
                            p_sum += phat[c][ut];
                            ++p_n;
                        }
                    }
                }
                SweepRecord rec;
                rec.detector = sel.label();
                if (cfg.networks.size() > 1)
                    rec.detector += "[nref=" + std::to_string(coord.n_reference) + "]";
                rec.q_bits = coord.q_bits;
                rec.alpha = coord.alpha;
                rec.p_attack = coord.p_attack;
                rec.time_step = s + 1;
                rec.pf_emp = static_cast<double>(n_fire[0]) / static_cast<double>(trials);
                rec.pd_emp = static_cast<double>(n_fire[1]) / static_cast<double>(trials);
                rec.pe_emp = cfg.prior_h0 * rec.pf_emp + cfg.prior_h1 * (1.0 - rec.pd_emp);
                rec.pe_ci = 1.96 * std::sqrt(rec.pe_emp * (1.0 - rec.pe_emp) /
                                             static_cast<double>(trials));
                const AnalyticPrediction pred =
                    predict_detector_at_step(cfg, coord, eng.net, sel, s + 1);
                rec.pe_analytic = pred.pe;
                rec.pd_analytic = pred.pd;
                rec.pf_analytic = pred.pf;
                rec.x_hat_mean = x_n > 0 ? x_sum / static_cast<double>(x_n) : kNan;
                rec.p_hat_mean = p_n > 0 ? p_sum / static_cast<double>(p_n) : kNan;
                result.records.push_back(std::move(rec));
            }
            if (failures > 0) {
                std::ostringstream msg;
                msg << sel.label() << " at (q=" << coord.q_bits << ", alpha=" << coord.alpha
                    << ", p_attack=" << coord.p_attack << "): " << failures
                    << " failing cells; first at trial "
                    << first_error_trial[static_cast<std::size_t>(d)] << ": "
                    << first_error[static_cast<std::size_t>(d)];
                result.errors.push_back(msg.str());
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCsvHeader =
    "detector,q,alpha,p_attack,t,pe_emp,pe_ci,pd_emp,pf_emp,pe_analytic,pd_analytic,"
    "pf_analytic,x_hat_mean,p_hat_mean";
}

void emit_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
    out << kCsvHeader << "\n";
    for (const auto& r : records) {
        out << r.detector << ',' << r.q_bits << ',' << format_double(r.alpha) << ','
            << format_double(r.p_attack) << ',' << r.time_step << ','
            << format_double(r.pe_emp) << ',' << format_double(r.pe_ci) << ','
            << format_double(r.pd_emp) << ',' << format_double(r.pf_emp) << ','
            << format_double(r.pe_analytic) << ',' << format_double(r.pd_analytic) << ','
            << format_double(r.pf_analytic) << ',' << format_double(r.x_hat_mean) << ','
            << format_double(r.p_hat_mean) << "\n";
    }
}

void emit_csv(const std::vector<SweepRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    emit_csv(records, out);
    out.flush();
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::vector<SweepRecord> parse_csv(std::istream& in) {
    std::vector<SweepRecord> records;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse_csv: empty input");
    if (trim(line) != kCsvHeader) throw std::runtime_error("parse_csv: unexpected header");
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_list(line, ',');
        if (fields.size() != 14) throw std::runtime_error("parse_csv: malformed row");
        SweepRecord r;
        r.detector = fields[0];
        r.q_bits = std::stoi(fields[1]);
        r.alpha = std::strtod(fields[2].c_str(), nullptr);
        r.p_attack = std::strtod(fields[3].c_str(), nullptr);
        r.time_step = std::stoi(fields[4]);
        r.pe_emp = std::strtod(fields[5].c_str(), nullptr);
        r.pe_ci = std::strtod(fields[6].c_str(), nullptr);
        r.pd_emp = std::strtod(fields[7].c_str(), nullptr);
        r.pf_emp = std::strtod(fields[8].c_str(), nullptr);
        r.pe_analytic = std::strtod(fields[9].c_str(), nullptr);
        r.pd_analytic = std::strtod(fields[10].c_str(), nullptr);
        r.pf_analytic = std::strtod(fields[11].c_str(), nullptr);
        r.x_hat_mean = std::strtod(fields[12].c_str(), nullptr);
        r.p_hat_mean = std::strtod(fields[13].c_str(), nullptr);
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Estimator study
// ---------------------------------------------------------------------------

std::vector<EstimatorRecord> run_estimator_study(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto [n, n_ref] = cfg.networks.front();
    (void)n;
    const Coordinate coord{cfg.networks.front().first, n_ref, cfg.q_bits.front(), 0.0, 0.0};
    const NetworkViews net = build_network(cfg, coord);
    const SensorSpec& ref_sensor = net.rs_view.front();
    const int cells = ref_sensor.codeword_count();
    const double beta0 = beta_h(cfg.model, ref_sensor, Hypothesis::H0);

    static const int kStepCounts[] = {1, 10, 100};
    std::vector<EstimatorRecord> records;
    for (std::size_t a = 0; a < cfg.attacks.size(); ++a) {
        const auto [alpha, pa] = cfg.attacks[a];
        const double x = alpha * pa;
        for (std::size_t s = 0; s < std::size(kStepCounts); ++s) {
            const long long n_samples = static_cast<long long>(n_ref) * kStepCounts[s];
            double sum = 0.0, sumsq = 0.0;
            for (int rep = 0; rep < cfg.trials; ++rep) {
                RandomStream rng(derive_seed(cfg.seed, 0xE571ull + a * 16 + s,
                                             static_cast<std::uint64_t>(rep), 1));
                long long anchors = 0;
                for (long long k = 0; k < n_samples; ++k) {
                    Codeword z = quantize(rng.normal(0.0, beta0), ref_sensor);
                    if (rng.bernoulli(alpha)) z = byzantine_report(z, pa, cells, rng);
                    if (z.index == net.anchor) ++anchors;
                }
                const double x_hat = attack_estimate_from_counts(anchors, n_samples);
                sum += x_hat;
                sumsq += x_hat * x_hat;
            }
            const double mean = sum / cfg.trials;
            const double var =
                (sumsq - sum * sum / cfg.trials) / std::max(1, cfg.trials - 1);
            EstimatorRecord rec;
            rec.x_true = x;
            rec.n_samples = n_samples;
            rec.replications = cfg.trials;
            rec.xhat_mean = mean;
            rec.xhat_variance = var;
            rec.crlb = x > 0.0 && x < 1.0
                           ? crlb_attack_parameter(x, n_samples).variance
                           : 0.0;
            records.push_back(rec);
        }
    }
    return records;
}

void emit_estimator_csv(const std::vector<EstimatorRecord>& records, std::ostream& out) {
    out << "x_true,n_samples,replications,xhat_mean,xhat_variance,crlb,variance_ratio\n";
    for (const auto& r : records) {
        const double ratio = r.crlb > 0.0 ? r.xhat_variance / r.crlb : 0.0;
        out << format_double(r.x_true) << ',' << r.n_samples << ',' << r.replications << ','
            << format_double(r.xhat_mean) << ',' << format_double(r.xhat_variance) << ','
            << format_double(r.crlb) << ',' << format_double(ratio) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

ExperimentConfig base_preset() {
    ExperimentConfig cfg;
    cfg.networks = {{280, 80}};
    cfg.model = SignalModel{0.1, 5.0, 1.0, 500};
    cfg.gain2 = 1.0;
    cfg.target_pfa = 0.4;
    cfg.prior_h0 = cfg.prior_h1 = 0.5;
    cfg.trials = 10000;
    cfg.seed = 20260801;
    cfg.threshold_scheme = ThresholdScheme::Explicit;
    cfg.explicit_thresholds[1] = {1.0};
    cfg.explicit_thresholds[2] = {-1.0, 0.0, 1.0};
    cfg.filter_tau = 0.5;
    return cfg;
}

std::vector<std::pair<double, double>> attack_grid(double alpha, double lo, double hi,
                                                   double step) {
    std::vector<std::pair<double, double>> grid;
    for (double pa = lo; pa <= hi + 1e-9; pa += step)
        grid.emplace_back(alpha, std::min(1.0, pa));
    return grid;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig2", "fig3", "fig4", "fig5", "fig6", "estimator", "blinding"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg = base_preset();
    if (name == "fig2") {
        cfg.q_bits = {1, 2};
        cfg.attacks = attack_grid(0.3, 0.0, 1.0, 0.1);
        cfg.detectors = {{DetectorKind::Lrt, {}},
                         {DetectorKind::Glrt, {}},
                         {DetectorKind::Glrtrs, {}}};
        cfg.time_steps = 1;
    } else if (name == "fig3") {
        cfg.q_bits = {1, 2};
        cfg.attacks = attack_grid(0.3, 0.1, 1.0, 0.1);
        cfg.detectors = {{DetectorKind::Glrtrs, {}},
                         {DetectorKind::EGlrtrs, 0.5},
                         {DetectorKind::EGlrtrs, 0.7}};
        cfg.time_steps = 10;
    } else if (name == "fig4") {
        cfg.networks = {{220, 20}, {280, 80}};
        cfg.q_bits = {1};
        cfg.attacks = {{0.3, 1.0}};
        cfg.detectors = {{DetectorKind::Glrtrs, {}}};
        cfg.time_steps = 10;
        cfg.record_all_steps = true;
    } else if (name == "fig5") {
        cfg.q_bits = {1, 2};
        cfg.attacks = attack_grid(0.3, 0.0, 1.0, 0.1);
        cfg.detectors = {{DetectorKind::Lrt, {}},
                         {DetectorKind::Lmpt, {}},
                         {DetectorKind::Lmptrs, {}}};
        cfg.time_steps = 1;
    } else if (name == "fig6") {
        cfg.q_bits = {1, 2};
        cfg.attacks = attack_grid(0.3, 0.1, 1.0, 0.1);
        cfg.detectors = {{DetectorKind::Lmptrs, {}}, {DetectorKind::ELmptrs, 0.5}};
        cfg.time_steps = 10;
    } else if (name == "estimator") {
        cfg.q_bits = {1};
        cfg.attacks = {{0.3, 0.5}, {0.3, 1.0}};
        cfg.detectors = {{DetectorKind::Glrtrs, {}}};
        cfg.roles = RoleAssignment::IidPerStep;
    } else if (name == "blinding") {
        cfg.q_bits = {1, 2};
        cfg.attacks = {{0.0, 1.0},  {0.1, 1.0}, {0.2, 1.0},  {0.3, 1.0}, {0.4, 1.0},
                       {0.5, 1.0},  {0.6, 1.0}, {0.7, 1.0},  {0.75, 1.0}};
        cfg.detectors = {{DetectorKind::Lrt, {}},
                         {DetectorKind::Glrt, {}},
                         {DetectorKind::Lmpt, {}}};
        cfg.time_steps = 1;
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown preset '" + name + "'; valid presets: " + names);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

namespace {

DetectorSelection parse_detector(const std::string& token) {
    DetectorSelection sel;
    std::string name = token;
    const auto paren = token.find('(');
    if (paren != std::string::npos) {
        name = trim(token.substr(0, paren));
        const auto close = token.find(')', paren);
        if (close == std::string::npos)
            throw std::invalid_argument("config: malformed detector '" + token + "'");
        const std::string arg = trim(token.substr(paren + 1, close - paren - 1));
        const auto eq = arg.find('=');
        if (eq == std::string::npos || trim(arg.substr(0, eq)) != "tau")
            throw std::invalid_argument("config: malformed detector option '" + arg + "'");
        sel.filter_tau = std::strtod(trim(arg.substr(eq + 1)).c_str(), nullptr);
    }
    if (name == "lrt") sel.kind = DetectorKind::Lrt;
    else if (name == "glrt") sel.kind = DetectorKind::Glrt;
    else if (name == "lmpt") sel.kind = DetectorKind::Lmpt;
    else if (name == "glrtrs") sel.kind = DetectorKind::Glrtrs;
    else if (name == "lmptrs") sel.kind = DetectorKind::Lmptrs;
    else if (name == "e-glrtrs") sel.kind = DetectorKind::EGlrtrs;
    else if (name == "e-lmptrs") sel.kind = DetectorKind::ELmptrs;
    else throw std::invalid_argument("config: unknown detector '" + name + "'");
    return sel;
}

std::vector<double> parse_doubles(const std::string& value) {
    std::vector<double> out;
    for (const auto& tok : split_list(value, ','))
        out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

bool parse_bool(const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("config: expected boolean, got '" + value + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg = base_preset();
    cfg.detectors.clear();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "networks") {
            cfg.networks.clear();
            for (const auto& tok : split_list(value, ',')) {
                const auto slash = tok.find('/');
                if (slash == std::string::npos)
                    throw std::invalid_argument("config: networks entries are N/NREF");
                cfg.networks.emplace_back(std::stoi(trim(tok.substr(0, slash))),
                                          std::stoi(trim(tok.substr(slash + 1))));
            }
        } else if (key == "q_bits") {
            cfg.q_bits.clear();
            for (double v : parse_doubles(value)) cfg.q_bits.push_back(static_cast<int>(v));
        } else if (key == "sparsity") {
            cfg.model.sparsity = std::strtod(value.c_str(), nullptr);
        } else if (key == "sigma_x2") {
            cfg.model.sigma_x2 = std::strtod(value.c_str(), nullptr);
        } else if (key == "sigma_n2") {
            cfg.model.sigma_n2 = std::strtod(value.c_str(), nullptr);
        } else if (key == "signal_dimension") {
            cfg.model.dimension = std::stoi(value);
        } else if (key == "gain2") {
            cfg.gain2 = std::strtod(value.c_str(), nullptr);
        } else if (key == "attacks") {
            cfg.attacks.clear();
            for (const auto& tok : split_list(value, ',')) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw std::invalid_argument("config: attacks entries are ALPHA:PA");
                cfg.attacks.emplace_back(
                    std::strtod(trim(tok.substr(0, colon)).c_str(), nullptr),
                    std::strtod(trim(tok.substr(colon + 1)).c_str(), nullptr));
            }
        } else if (key == "detectors") {
            cfg.detectors.clear();
            for (const auto& tok : split_list(value, ','))
                cfg.detectors.push_back(parse_detector(tok));
        } else if (key == "target_pfa") {
            cfg.target_pfa = std::strtod(value.c_str(), nullptr);
        } else if (key == "priors") {
            const auto priors = parse_doubles(value);
            if (priors.size() != 2)
                throw std::invalid_argument("config: priors needs two values");
            cfg.prior_h0 = priors[0];
            cfg.prior_h1 = priors[1];
        } else if (key == "trials") {
            cfg.trials = std::stoi(value);
        } else if (key == "time_steps") {
            cfg.time_steps = std::stoi(value);
        } else if (key == "seed") {
            cfg.seed = std::stoull(value);
        } else if (key == "threshold_scheme") {
            if (value == "equiprobable_h0") cfg.threshold_scheme = ThresholdScheme::EquiprobableH0;
            else if (value == "explicit") cfg.threshold_scheme = ThresholdScheme::Explicit;
            else throw std::invalid_argument("config: unknown threshold_scheme '" + value + "'");
        } else if (key.rfind("thresholds_q", 0) == 0) {
            const int q = std::stoi(key.substr(std::strlen("thresholds_q")));
            cfg.explicit_thresholds[q] = parse_doubles(value);
        } else if (key == "filter_tau") {
            cfg.filter_tau = std::strtod(value.c_str(), nullptr);
        } else if (key == "filter_slack") {
            cfg.filter_slack = std::strtod(value.c_str(), nullptr);
        } else if (key == "nominal_p") {
            cfg.nominal_p = std::strtod(value.c_str(), nullptr);
        } else if (key == "surrogate") {
            if (value == "asymptotic") cfg.surrogate = Surrogate::Asymptotic;
            else if (value == "exact_bg") cfg.surrogate = Surrogate::ExactBg;
            else throw std::invalid_argument("config: unknown surrogate '" + value + "'");
        } else if (key == "reference_offset") {
            cfg.reference_offset = std::strtod(value.c_str(), nullptr);
        } else if (key == "reference_mirror") {
            cfg.reference_mirror = parse_bool(value);
        } else if (key == "role_assignment") {
            if (value == "deterministic") cfg.roles = RoleAssignment::Deterministic;
            else if (value == "iid") cfg.roles = RoleAssignment::Iid;
            else if (value == "iid_per_step") cfg.roles = RoleAssignment::IidPerStep;
            else throw std::invalid_argument("config: unknown role_assignment '" + value + "'");
        } else if (key == "record_steps") {
            if (value == "all") cfg.record_all_steps = true;
            else if (value == "final") cfg.record_all_steps = false;
            else throw std::invalid_argument("config: record_steps is 'all' or 'final'");
        } else if (key == "common_random_numbers") {
            cfg.common_random_numbers = parse_bool(value);
        } else if (key == "p_max") {
            cfg.p_max = std::strtod(value.c_str(), nullptr);
        } else if (key == "p_tol") {
            cfg.p_tol = std::strtod(value.c_str(), nullptr);
        } else if (key == "workers") {
            cfg.workers = std::stoi(value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

std::vector<CoordinateDiagnostics> run_checks(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::vector<CoordinateDiagnostics> out;
    for (auto [n, nref] : cfg.networks)
        for (int q : cfg.q_bits) {
            Coordinate coord{n, nref, q, cfg.attacks.front().first,
                             cfg.attacks.front().second};
            const NetworkViews net = build_network(cfg, coord);
            CoordinateDiagnostics diag;
            diag.coord = coord;
            diag.assumption = assumption_check(cfg.model, net.rs_view.front());
            const FusionWeights g =
                glrt_weights(cfg.model, net.baseline_view, cfg.model.sparsity);
            const FusionWeights w = lmpt_weights(cfg.model, net.baseline_view, 0.0);
            diag.blinding_glrt = blinding_product(net.baseline_view, cfg.model, g.rows);
            diag.blinding_lmpt = blinding_product(net.baseline_view, cfg.model, w.rows);
            out.push_back(std::move(diag));
        }
    return out;
}

}  // namespace byzdet
