#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "byzdet/analysis.hpp"
#include "byzdet/byzantine.hpp"
#include "byzdet/detectors.hpp"
#include "byzdet/random.hpp"
#include "oracles.hpp"

using namespace byzdet;

namespace {

SensorSpec make_sensor(std::vector<double> interior, double gain2 = 1.0) {
    SensorSpec s;
    s.gain2 = gain2;
    s.thresholds = make_threshold_ladder(interior);
    validate_sensor(s);
    return s;
}

CodewordDistribution dist(std::vector<double> probs) {
    return CodewordDistribution{std::move(probs)};
}

}  // namespace

TEST_CASE("byzantine_report") {
    RandomStream rng(11);
    SUBCASE("no attack is the identity") {
        for (int i = 0; i < 100; ++i) {
            const Codeword z{1 + rng.uniform_int(4)};
            CHECK(byzantine_report(z, 0.0, 4, rng) == z);
        }
    }
    SUBCASE("q = 1 with certain attack flips") {
        for (int i = 0; i < 100; ++i) {
            const Codeword z{1 + rng.uniform_int(2)};
            CHECK(byzantine_report(z, 1.0, 2, rng).index == 3 - z.index);
        }
    }
    SUBCASE("q = 2 transition frequencies") {
        const int n = 1000000;
        const double pa = 0.6;
        std::vector<double> freq(4, 0.0);
        for (int i = 0; i < n; ++i)
            freq[static_cast<std::size_t>(byzantine_report(Codeword{2}, pa, 4, rng).index - 1)] +=
                1.0 / n;
        CHECK(std::abs(freq[1] - 0.4) < 0.002);
        CHECK(std::abs(freq[0] - 0.2) < 0.002);
        CHECK(std::abs(freq[2] - 0.2) < 0.002);
        CHECK(std::abs(freq[3] - 0.2) < 0.002);
    }
}

TEST_CASE("byzantine_codeword_pmf") {
    SUBCASE("no attack is the identity") {
        const CodewordDistribution honest = dist({0.1, 0.2, 0.3, 0.4});
        const CodewordDistribution out = byzantine_codeword_pmf(honest, 0.0);
        for (int j = 0; j < 4; ++j) CHECK(out[j] == honest[j]);
    }
    SUBCASE("q = 1 certain attack complements") {
        const CodewordDistribution out = byzantine_codeword_pmf(dist({0.4, 0.6}), 1.0);
        CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(out[1] == doctest::Approx(0.4).epsilon(1e-14));
    }
    SUBCASE("uniform pmf is a fixed point") {
        for (double pa : {0.0, 0.3, 0.7, 1.0}) {
            const CodewordDistribution out =
                byzantine_codeword_pmf(dist({0.25, 0.25, 0.25, 0.25}), pa);
            for (int j = 0; j < 4; ++j) CHECK(out[j] == doctest::Approx(0.25).epsilon(1e-14));
        }
    }
}

TEST_CASE("mixture_codeword_pmf") {
    SUBCASE("alpha = 0 or P_A = 0 recover the honest pmf") {
        const CodewordDistribution honest = dist({0.4, 0.6});
        for (AttackParams a : {AttackParams{0.0, 0.8}, AttackParams{0.5, 0.0}}) {
            const CodewordDistribution out = mixture_codeword_pmf(honest, a);
            for (int j = 0; j < 2; ++j)
                CHECK(out[j] == doctest::Approx(honest[j]).epsilon(1e-15));
        }
    }
    SUBCASE("hand-expanded single-parameter form") {
        const CodewordDistribution out =
            mixture_codeword_pmf(dist({0.4, 0.6}), AttackParams{0.3, 0.5});
        CHECK(out[0] == doctest::Approx(0.43).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(0.57).epsilon(1e-12));
    }
    SUBCASE("two-population form equals the x-form") {
        RandomStream rng(17);
        double max_diff = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const int cells = 2 << rng.uniform_int(3);
            std::vector<double> p(static_cast<std::size_t>(cells));
            double sum = 0.0;
            for (double& v : p) {
                v = rng.uniform() + 1e-3;
                sum += v;
            }
            for (double& v : p) v /= sum;
            const AttackParams attack{rng.uniform(), rng.uniform()};
            const CodewordDistribution honest = dist(p);
            const CodewordDistribution via_mix = mixture_codeword_pmf(honest, attack);
            const CodewordDistribution via_x = mixture_codeword_pmf_x(honest, attack.x());
            CHECK(via_mix.is_valid(1e-12));
            for (int j = 0; j < cells; ++j)
                max_diff = std::max(max_diff, std::abs(via_mix[j] - via_x[j]));
        }
        CHECK(max_diff < 1e-13);
    }
}

TEST_CASE("attack parameter product stays consistent") {
    const AttackParams a{0.3, 0.5};
    CHECK(std::abs(a.x() - 0.15) <= 1e-15);
}

TEST_CASE("monotone degradation on the way to the blinding point") {
    // TV distance between the two hypotheses' mixtures shrinks as the attack
    // product grows toward the blinding point.
    const CodewordDistribution h0 = dist({0.8413, 0.1587});
    const CodewordDistribution h1 = dist({0.7929, 0.2071});
    double prev = 1e9;
    for (double x = 0.0; x <= 0.5 + 1e-12; x += 0.05) {
        const CodewordDistribution m0 = mixture_codeword_pmf_x(h0, x);
        const CodewordDistribution m1 = mixture_codeword_pmf_x(h1, x);
        double tv = 0.0;
        for (int j = 0; j < 2; ++j) tv += 0.5 * std::abs(m0[j] - m1[j]);
        CHECK(tv <= prev + 1e-15);
        prev = tv;
    }
    CHECK(prev < 1e-12);  // fully blind at x = 1/2 for one-bit sensors
}

TEST_CASE("blinding_product") {
    const SignalModel model{0.1, 5.0, 1.0, 100};

    SUBCASE("q = 1 homogeneous network: closed form matches a root find") {
        std::vector<SensorSpec> sensors(8, make_sensor({1.0}));
        const FusionWeights g = glrt_weights(model, sensors, model.sparsity);
        const double x_star = blinding_product(sensors, model, g.rows);

        // Independent oracle: bisection on the mean gap of the same weighted
        // statistic as a function of the attack product.
        std::vector<CodewordDistribution> h0, h1;
        for (const auto& s : sensors) {
            h0.push_back(honest_codeword_pmf(model, s, Hypothesis::H0));
            h1.push_back(honest_codeword_pmf(model, s, Hypothesis::H1));
        }
        const auto mean_gap = [&](double x) {
            double gap = 0.0;
            for (std::size_t i = 0; i < sensors.size(); ++i) {
                const CodewordDistribution m0 = mixture_codeword_pmf_x(h0[i], x);
                const CodewordDistribution m1 = mixture_codeword_pmf_x(h1[i], x);
                for (int j = 0; j < m0.size(); ++j)
                    gap += (m1[j] - m0[j]) * g.rows[i][static_cast<std::size_t>(j)];
            }
            return gap;
        };
        const double root = oracle::bisect(mean_gap, 0.0, 1.0);
        CHECK(x_star == doctest::Approx(root).epsilon(1e-9));
        CHECK(x_star == doctest::Approx(0.5).epsilon(1e-12));

        // Plugging the blinding point back flattens the mean gap.
        CHECK(std::abs(mean_gap(x_star)) < 1e-10);
    }
    SUBCASE("q = 2 blinding point") {
        std::vector<SensorSpec> sensors(4, make_sensor({-1.0, 0.0, 1.0}));
        const FusionWeights w = lmpt_weights(model, sensors, 0.0);
        const double x_star = blinding_product(sensors, model, w.rows);
        CHECK(x_star == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("all-zero weights are orthogonal to the attack direction") {
        std::vector<SensorSpec> sensors(3, make_sensor({1.0}));
        std::vector<std::vector<double>> zeros(3, std::vector<double>(2, 0.0));
        CHECK_THROWS_AS(blinding_product(sensors, model, zeros), std::runtime_error);
    }
    SUBCASE("deflection coefficient vanishes at the blinding point") {
        std::vector<SensorSpec> sensors(6, make_sensor({1.0}));
        const FusionWeights g = glrt_weights(model, sensors, model.sparsity);
        const double x_star = blinding_product(sensors, model, g.rows);
        std::vector<CodewordDistribution> m0, m1;
        for (const auto& s : sensors) {
            m0.push_back(mixture_codeword_pmf_x(honest_codeword_pmf(model, s, Hypothesis::H0),
                                                x_star));
            m1.push_back(mixture_codeword_pmf_x(honest_codeword_pmf(model, s, Hypothesis::H1),
                                                x_star));
        }
        const StatisticMoments m = statistic_moments(g.rows, m0, m1);
        CHECK(deflection_coefficient(m) < 1e-10);
    }
}
