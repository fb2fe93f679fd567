#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "byzdet/analysis.hpp"
#include "byzdet/byzantine.hpp"
#include "byzdet/detectors.hpp"
#include "byzdet/numerics.hpp"
#include "byzdet/random.hpp"
#include "oracles.hpp"

using namespace byzdet;

namespace {

CodewordDistribution dist(std::vector<double> probs) {
    return CodewordDistribution{std::move(probs)};
}

std::vector<CodewordDistribution> random_pmfs(RandomStream& rng, int sensors, int cells) {
    std::vector<CodewordDistribution> out;
    for (int i = 0; i < sensors; ++i) {
        std::vector<double> p(static_cast<std::size_t>(cells));
        double sum = 0.0;
        for (double& v : p) {
            v = rng.uniform() + 0.05;
            sum += v;
        }
        for (double& v : p) v /= sum;
        out.push_back(dist(p));
    }
    return out;
}

std::vector<std::vector<double>> random_weights(RandomStream& rng, int sensors, int cells) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(sensors),
                                       std::vector<double>(static_cast<std::size_t>(cells)));
    for (auto& row : w)
        for (double& v : row) v = rng.normal();
    return w;
}

}  // namespace

TEST_CASE("statistic_moments basics") {
    SUBCASE("all-zero weights") {
        const std::vector<CodewordDistribution> pmfs = {dist({0.5, 0.5}), dist({0.2, 0.8})};
        const std::vector<std::vector<double>> w(2, std::vector<double>(2, 0.0));
        const StatisticMoments m = statistic_moments(w, pmfs, pmfs);
        CHECK(m.mean_h0 == 0.0);
        CHECK(m.var_h0 == 0.0);
        CHECK(m.mean_h1 == 0.0);
        CHECK(m.var_h1 == 0.0);
    }
    SUBCASE("Rademacher single sensor") {
        const std::vector<CodewordDistribution> pmfs = {dist({0.5, 0.5})};
        const std::vector<std::vector<double>> w = {{-1.0, 1.0}};
        const StatisticMoments m = statistic_moments(w, pmfs, pmfs);
        CHECK(m.mean_h0 == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(m.var_h0 == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("toy network matches exhaustive enumeration") {
        RandomStream rng(3);
        const auto pmfs0 = random_pmfs(rng, 3, 4);
        const auto pmfs1 = random_pmfs(rng, 3, 4);
        const auto w = random_weights(rng, 3, 4);
        const StatisticMoments m = statistic_moments(w, pmfs0, pmfs1);
        const oracle::EnumMoments e = oracle::enumerate_moments(
            pmfs0, pmfs1, [&](std::span<const Codeword> r) {
                double s = 0.0;
                for (std::size_t i = 0; i < r.size(); ++i)
                    s += w[i][static_cast<std::size_t>(r[i].index - 1)];
                return s;
            });
        CHECK(m.mean_h0 == doctest::Approx(e.mean_h0).epsilon(1e-12));
        CHECK(m.var_h0 == doctest::Approx(e.var_h0).epsilon(1e-12));
        CHECK(m.mean_h1 == doctest::Approx(e.mean_h1).epsilon(1e-12));
        CHECK(m.var_h1 == doctest::Approx(e.var_h1).epsilon(1e-12));
    }
}

TEST_CASE("predict_performance") {
    SUBCASE("threshold at the null mean halves the false alarm") {
        const StatisticMoments m{1.5, 2.0, 3.0, 2.0};
        const PerformancePoint p = predict_performance(m, 1.5, 0.5, 0.5);
        CHECK(p.pf == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("degenerate variance behaves as a step") {
        const StatisticMoments m{0.0, 1.0, 2.0, 0.0};
        CHECK(predict_performance(m, 1.0, 0.5, 0.5).pd == 1.0);
        CHECK(predict_performance(m, 2.0, 0.5, 0.5).pd == 0.0);  // tie -> no exceedance
        CHECK(predict_performance(m, 3.0, 0.5, 0.5).pd == 0.0);
    }
    SUBCASE("error probability combines the priors") {
        const StatisticMoments m{0.0, 1.0, 1.0, 1.0};
        const PerformancePoint p = predict_performance(m, 0.5, 0.3, 0.7);
        CHECK(p.pe == doctest::Approx(0.3 * p.pf + 0.7 * (1.0 - p.pd)).epsilon(1e-15));
    }
}

TEST_CASE("adaptive_threshold") {
    SUBCASE("half false alarm sits at the null mean") {
        const StatisticMoments m{2.5, 4.0, 9.9, 4.0};
        const ThresholdResult t = adaptive_threshold(m, 0.5);
        CHECK_FALSE(t.degenerate);
        CHECK(t.threshold == doctest::Approx(2.5).epsilon(1e-9));
    }
    SUBCASE("unit null moments at the reference operating point") {
        const StatisticMoments m{0.0, 1.0, 1.0, 1.0};
        CHECK(adaptive_threshold(m, 0.4).threshold ==
              doctest::Approx(0.2533).epsilon(1e-3));
    }
    SUBCASE("degenerate null variance flags and returns the mean") {
        const StatisticMoments m{1.25, 0.0, 2.0, 1.0};
        const ThresholdResult t = adaptive_threshold(m, 0.4);
        CHECK(t.degenerate);
        CHECK(t.threshold == 1.25);
    }
    SUBCASE("round trip: predicted false alarm equals the target") {
        RandomStream rng(21);
        for (int i = 0; i < 100; ++i) {
            const StatisticMoments m{rng.normal(0.0, 5.0), 0.1 + rng.uniform() * 10.0,
                                     rng.normal(0.0, 5.0), 0.1 + rng.uniform() * 10.0};
            const double pfa = 0.01 + 0.98 * rng.uniform();
            const double t = adaptive_threshold(m, pfa).threshold;
            CHECK(predict_performance(m, t, 0.5, 0.5).pf == doctest::Approx(pfa).epsilon(1e-12));
        }
    }
    SUBCASE("rejects out-of-range targets") {
        const StatisticMoments m{0.0, 1.0, 1.0, 1.0};
        CHECK_THROWS_AS(adaptive_threshold(m, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(adaptive_threshold(m, 1.0), std::invalid_argument);
    }
}

TEST_CASE("deflection_coefficient") {
    CHECK(deflection_coefficient(StatisticMoments{1.0, 1.0, 1.0, 5.0}) == 0.0);
    CHECK(deflection_coefficient(StatisticMoments{0.0, 1.0, 1.0, 4.0}) ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(deflection_coefficient(StatisticMoments{0.0, 1.0, 1.0, 0.0}),
                    std::runtime_error);
}

TEST_CASE("crlb_attack_parameter") {
    SUBCASE("closed-form values") {
        CHECK(crlb_attack_parameter(0.5, 100).variance == doctest::Approx(0.0025).epsilon(1e-15));
        CHECK(crlb_attack_parameter(0.15, 80).variance ==
              doctest::Approx(0.00159375).epsilon(1e-15));
    }
    SUBCASE("degenerate boundary") {
        CHECK(crlb_attack_parameter(0.0, 10).degenerate);
        CHECK(crlb_attack_parameter(1.0, 10).degenerate);
        CHECK(crlb_attack_parameter(0.0, 10).variance == 0.0);
    }
    SUBCASE("rejects invalid inputs") {
        CHECK_THROWS_AS(crlb_attack_parameter(0.5, 0), std::invalid_argument);
        CHECK_THROWS_AS(crlb_attack_parameter(-0.1, 10), std::invalid_argument);
    }
    SUBCASE("estimator variance attains the bound") {
        // 10^4 trials of the anchor-count estimator at x = 0.15, n = 800.
        RandomStream rng(6021);
        const double x = 0.15;
        const long long n = 800;
        const int reps = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (int r = 0; r < reps; ++r) {
            long long anchors = 0;
            for (long long k = 0; k < n; ++k)
                if (!rng.bernoulli(x)) ++anchors;
            const double xh = attack_estimate_from_counts(anchors, n);
            sum += xh;
            sumsq += xh * xh;
        }
        const double mean = sum / reps;
        const double var = (sumsq - sum * sum / reps) / (reps - 1);
        const double crlb = crlb_attack_parameter(x, n).variance;
        CHECK(std::abs(mean - x) < 3.0 * std::sqrt(crlb / reps));
        CHECK(var == doctest::Approx(crlb).epsilon(0.05));
    }
}

TEST_CASE("moments linearity under weight scaling") {
    RandomStream rng(34);
    const auto pmfs0 = random_pmfs(rng, 5, 4);
    const auto pmfs1 = random_pmfs(rng, 5, 4);
    const auto w = random_weights(rng, 5, 4);
    const StatisticMoments base = statistic_moments(w, pmfs0, pmfs1);
    for (double c : {0.5, 2.0, 17.0}) {
        auto scaled = w;
        for (auto& row : scaled)
            for (double& v : row) v *= c;
        const StatisticMoments m = statistic_moments(scaled, pmfs0, pmfs1);
        CHECK(m.mean_h0 == doctest::Approx(c * base.mean_h0).epsilon(1e-12));
        CHECK(m.mean_h1 == doctest::Approx(c * base.mean_h1).epsilon(1e-12));
        CHECK(m.var_h0 == doctest::Approx(c * c * base.var_h0).epsilon(1e-12));
        CHECK(m.var_h1 == doctest::Approx(c * c * base.var_h1).epsilon(1e-12));
        // The calibrated verdict region is scale invariant: threshold and
        // statistic scale together.
        const double t_base = adaptive_threshold(base, 0.4).threshold;
        const double t_scaled = adaptive_threshold(m, 0.4).threshold;
        CHECK(t_scaled == doctest::Approx(c * t_base).epsilon(1e-12));
    }
}
