#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "byzdet/numerics.hpp"
#include "byzdet/random.hpp"
#include "byzdet/sensing.hpp"
#include "oracles.hpp"

using namespace byzdet;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SensorSpec make_sensor(std::vector<double> interior, double gain2 = 1.0) {
    SensorSpec s;
    s.gain2 = gain2;
    s.thresholds = make_threshold_ladder(interior);
    validate_sensor(s);
    return s;
}

}  // namespace

TEST_CASE("beta_h") {
    SensorSpec sensor = make_sensor({0.0});
    SUBCASE("H1 collapses to H0 at p = 0") {
        const SignalModel m{0.0, 5.0, 1.0, 100};
        CHECK(beta_h(m, sensor, Hypothesis::H1) == beta_h(m, sensor, Hypothesis::H0));
    }
    SUBCASE("direct substitution") {
        const SignalModel m{0.1, 5.0, 1.0, 100};
        CHECK(beta_h(m, sensor, Hypothesis::H1) ==
              doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
    }
    SUBCASE("H0 ignores the sparsity") {
        for (double p : {0.0, 0.1, 0.7}) {
            const SignalModel m{p, 5.0, 2.0, 100};
            CHECK(beta_h(m, sensor, Hypothesis::H0) ==
                  doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
        }
    }
    SUBCASE("H1 never below H0, equality iff p * gain2 = 0") {
        RandomStream rng(5);
        for (int i = 0; i < 200; ++i) {
            SensorSpec s = make_sensor({0.0}, rng.bernoulli(0.3) ? 0.0 : rng.uniform() * 3.0);
            const SignalModel m{rng.bernoulli(0.3) ? 0.0 : rng.uniform(), 5.0, 1.0, 100};
            const double b0 = beta_h(m, s, Hypothesis::H0);
            const double b1 = beta_h(m, s, Hypothesis::H1);
            CHECK(b1 >= b0);
            if (m.sparsity * s.gain2 == 0.0) CHECK(b1 == b0);
            else CHECK(b1 > b0);
        }
    }
}

TEST_CASE("quantize conventions") {
    SUBCASE("q = 1") {
        SensorSpec s = make_sensor({0.0});
        CHECK(quantize(0.3, s).index == 2);
        CHECK(quantize(-0.3, s).index == 1);
        CHECK(quantize(0.0, s).index == 2);  // boundary goes right
    }
    SUBCASE("q = 2") {
        SensorSpec s = make_sensor({-1.0, 0.0, 1.0});
        CHECK(quantize(-5.0, s).index == 1);
        CHECK(quantize(-1.0, s).index == 2);
        CHECK(quantize(0.99, s).index == 3);
        CHECK(quantize(17.0, s).index == 4);
    }
}

TEST_CASE("honest_codeword_pmf") {
    const SignalModel model{0.1, 5.0, 1.0, 100};
    SUBCASE("symmetric single threshold") {
        SensorSpec s = make_sensor({0.0});
        for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
            const CodewordDistribution pmf = honest_codeword_pmf(model, s, h);
            CHECK(pmf[0] == doctest::Approx(0.5).epsilon(1e-14));
            CHECK(pmf[1] == doctest::Approx(0.5).epsilon(1e-14));
        }
    }
    SUBCASE("p = 0 gives identical pmfs under both hypotheses") {
        const SignalModel flat{0.0, 5.0, 1.0, 100};
        SensorSpec s = make_sensor({-0.7, 0.2, 1.1});
        const CodewordDistribution a0 = honest_codeword_pmf(flat, s, Hypothesis::H0);
        const CodewordDistribution a1 = honest_codeword_pmf(flat, s, Hypothesis::H1);
        for (int j = 0; j < a0.size(); ++j) CHECK(a0[j] == a1[j]);
    }
    SUBCASE("unit-variance q = 2 ladder") {
        SensorSpec s = make_sensor({-1.0, 0.0, 1.0});
        const SignalModel unit{0.0, 5.0, 1.0, 100};
        const CodewordDistribution pmf = honest_codeword_pmf(unit, s, Hypothesis::H0);
        CHECK(pmf[0] == doctest::Approx(0.15866).epsilon(1e-4));
        CHECK(pmf[1] == doctest::Approx(0.34134).epsilon(1e-4));
        CHECK(pmf[2] == doctest::Approx(0.34134).epsilon(1e-4));
        CHECK(pmf[3] == doctest::Approx(0.15866).epsilon(1e-4));
    }
    SUBCASE("property: valid distribution for random ladders") {
        RandomStream rng(99);
        for (int i = 0; i < 1000; ++i) {
            const int q = 1 + rng.uniform_int(3);
            std::vector<double> interior;
            for (int k = 0; k < (1 << q) - 1; ++k) interior.push_back(rng.normal(0.0, 2.0));
            std::sort(interior.begin(), interior.end());
            bool distinct = true;
            for (std::size_t k = 1; k < interior.size(); ++k)
                if (interior[k] == interior[k - 1]) distinct = false;
            if (!distinct) continue;
            SensorSpec s = make_sensor(interior, rng.uniform() * 4.0);
            const SignalModel m{rng.uniform() * 0.5, 1.0 + rng.uniform() * 9.0,
                                0.25 + rng.uniform() * 4.0, 100};
            const Hypothesis h = rng.bernoulli(0.5) ? Hypothesis::H0 : Hypothesis::H1;
            CHECK(honest_codeword_pmf(m, s, h).is_valid(1e-12));
        }
    }
}

TEST_CASE("sensor validation rejects malformed specs") {
    SensorSpec s;
    s.thresholds = {-kInf, 0.0};
    CHECK_THROWS_AS(validate_sensor(s), std::invalid_argument);
    s.thresholds = {-kInf, 1.0, 0.5, kInf};
    CHECK_THROWS_AS(validate_sensor(s), std::invalid_argument);
    s.thresholds = {-kInf, 0.0, 1.0, kInf};  // 3 cells, not a power of two
    CHECK_THROWS_AS(validate_sensor(s), std::invalid_argument);
    s.thresholds = {-kInf, 0.0, kInf};
    s.gain2 = -1.0;
    CHECK_THROWS_AS(validate_sensor(s), std::invalid_argument);
}

TEST_CASE("equiprobable thresholds") {
    const auto q1 = equiprobable_h0_thresholds(1, 1.0);
    REQUIRE(q1.size() == 1);
    CHECK(q1[0] == doctest::Approx(0.0).epsilon(1e-9));
    const auto q2 = equiprobable_h0_thresholds(2, 1.0);
    REQUIRE(q2.size() == 3);
    CHECK(q2[0] == doctest::Approx(-0.6744898).epsilon(1e-6));
    CHECK(std::abs(q2[1]) < 1e-9);
    CHECK(q2[2] == doctest::Approx(0.6744898).epsilon(1e-6));
}

TEST_CASE("make_reference_thresholds") {
    const SignalModel model{0.1, 5.0, 1.0, 100};
    SUBCASE("q = 1 with regular threshold at zero") {
        SensorSpec base = make_sensor({0.0});
        const auto ref = make_reference_thresholds(base, 6.0);
        REQUIRE(ref.size() == 3);
        CHECK(ref[1] == doctest::Approx(-6.0).epsilon(1e-12));
        SensorSpec ref_sensor = base;
        ref_sensor.thresholds = ref;
        ref_sensor.is_reference = true;
        const CodewordDistribution pmf = honest_codeword_pmf(model, ref_sensor, Hypothesis::H0);
        CHECK(pmf[1] > 1.0 - 1e-8);
        CHECK(reference_anchor_codeword(ref_sensor) == 2);
    }
    SUBCASE("q = 2: all finite thresholds at least offset below the regular ladder") {
        SensorSpec base = make_sensor({-1.0, 0.0, 1.0});
        const auto ref = make_reference_thresholds(base, 6.0);
        for (std::size_t j = 1; j + 1 < ref.size(); ++j) CHECK(ref[j] <= -6.0);
        SensorSpec ref_sensor = base;
        ref_sensor.thresholds = ref;
        ref_sensor.is_reference = true;
        for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1})
            CHECK(honest_codeword_pmf(model, ref_sensor, h)[3] > 1.0 - 1e-8);
        CHECK(reference_anchor_codeword(ref_sensor) == 4);
    }
    SUBCASE("mirrored ladder anchors the first codeword") {
        SensorSpec base = make_sensor({0.0});
        SensorSpec ref_sensor = base;
        ref_sensor.thresholds = make_reference_thresholds(base, 6.0, true);
        ref_sensor.is_reference = true;
        CHECK(ref_sensor.thresholds[1] == doctest::Approx(6.0));
        CHECK(reference_anchor_codeword(ref_sensor) == 1);
        CHECK(honest_codeword_pmf(model, ref_sensor, Hypothesis::H1)[0] > 1.0 - 1e-6);
        CHECK(assumption_check(model, ref_sensor).holds);
    }
    SUBCASE("offset must be positive") {
        SensorSpec base = make_sensor({0.0});
        CHECK_THROWS_AS(make_reference_thresholds(base, 0.0), std::invalid_argument);
    }
}

TEST_CASE("assumption_check") {
    const SignalModel model{0.1, 5.0, 1.0, 100};
    SensorSpec base = make_sensor({0.0});

    SUBCASE("offset 6 satisfies the one-codeword condition") {
        SensorSpec ref = base;
        ref.thresholds = make_reference_thresholds(base, 6.0);
        ref.is_reference = true;
        const AssumptionCheck chk = assumption_check(model, ref);
        CHECK(chk.holds);
        CHECK(chk.mass > 1.0 - 1e-6);
    }
    SUBCASE("a regular symmetric sensor fails with mass 1/2") {
        const AssumptionCheck chk = assumption_check(model, base);
        CHECK_FALSE(chk.holds);
        CHECK(chk.mass == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("offset 3 is not enough at the 1e-6 bar") {
        // At unit variance (p = 0) the anchor mass is exactly 1 - Q(3).
        const SignalModel unit{0.0, 5.0, 1.0, 100};
        SensorSpec ref = base;
        ref.thresholds = make_reference_thresholds(base, 3.0);
        ref.is_reference = true;
        const AssumptionCheck chk = assumption_check(unit, ref);
        CHECK_FALSE(chk.holds);
        CHECK(chk.mass == doctest::Approx(1.0 - oracle::q_tail(3.0)).epsilon(1e-6));
    }
}

TEST_CASE("asymptotic sampler moments") {
    const SignalModel model{0.0, 5.0, 1.0, 100};
    SensorSpec s = make_sensor({0.0});
    RandomStream rng(2024);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = sample_asymptotic_observation(model, s, Hypothesis::H0, rng);
        sum += y;
        sumsq += y * y;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("exact Bernoulli-Gaussian sampler") {
    SensorSpec s = make_sensor({0.0});
    RandomStream rng(31337);

    SUBCASE("empirical variance matches the asymptotic one") {
        const SignalModel model{0.1, 5.0, 1.0, 100};
        const int n = 200000;
        double sumsq = 0.0, sum = 0.0;
        long long support_total = 0;
        for (int i = 0; i < n; ++i) {
            int support = 0;
            const double y = sample_sparse_observation(model, s, Hypothesis::H1, rng, &support);
            sum += y;
            sumsq += y * y;
            support_total += support;
        }
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        const double beta2 = 1.0 + 0.1 * 5.0;
        CHECK(var == doctest::Approx(beta2).epsilon(0.02));

        // Support fraction is Binomial(n * M, p).
        const double draws = static_cast<double>(n) * model.dimension;
        const double frac = static_cast<double>(support_total) / draws;
        const double sigma = std::sqrt(0.1 * 0.9 / draws);
        CHECK(std::abs(frac - 0.1) <= 3.0 * sigma);
    }
    SUBCASE("p = 0 under H1 is pure noise") {
        const SignalModel model{0.0, 5.0, 1.0, 100};
        int support = 7;
        const double y = sample_sparse_observation(model, s, Hypothesis::H1, rng, &support);
        CHECK(support == 0);
        CHECK(std::isfinite(y));
    }
    SUBCASE("Kolmogorov-Smirnov distance to the Gaussian surrogate is small") {
        const SignalModel model{0.05, 5.0, 1.0, 500};
        const int n = 40000;
        std::vector<double> exact(n), gauss(n);
        for (int i = 0; i < n; ++i)
            exact[static_cast<std::size_t>(i)] =
                sample_sparse_observation(model, s, Hypothesis::H1, rng);
        for (int i = 0; i < n; ++i)
            gauss[static_cast<std::size_t>(i)] =
                sample_asymptotic_observation(model, s, Hypothesis::H1, rng);
        std::sort(exact.begin(), exact.end());
        std::sort(gauss.begin(), gauss.end());
        std::vector<double> all(exact);
        all.insert(all.end(), gauss.begin(), gauss.end());
        std::sort(all.begin(), all.end());
        double ks = 0.0;
        std::size_t je = 0, jg = 0;
        for (double t : all) {
            while (je < exact.size() && exact[je] <= t) ++je;
            while (jg < gauss.size() && gauss[jg] <= t) ++jg;
            ks = std::max(ks, std::abs(static_cast<double>(je) - static_cast<double>(jg)) / n);
        }
        CHECK(ks < 0.012);
    }
}

TEST_CASE("empirical codeword frequencies match the analytic pmf") {
    const SignalModel model{0.1, 5.0, 1.0, 100};
    SensorSpec s = make_sensor({-1.0, 0.0, 1.0});
    const CodewordDistribution pmf = honest_codeword_pmf(model, s, Hypothesis::H1);
    RandomStream rng(4242);
    const int n = 1000000;
    std::vector<double> freq(4, 0.0);
    for (int i = 0; i < n; ++i) {
        const double y = sample_asymptotic_observation(model, s, Hypothesis::H1, rng);
        freq[static_cast<std::size_t>(quantize(y, s).index - 1)] += 1.0;
    }
    double tv = 0.0;
    for (int j = 0; j < 4; ++j) tv += std::abs(freq[static_cast<std::size_t>(j)] / n - pmf[j]);
    CHECK(tv / 2.0 < 0.01);
}

TEST_CASE("sparse-regime codeword pmfs: exact BG vs asymptotic surrogate") {
    const SignalModel model{0.01, 5.0, 1.0, 100};
    SensorSpec s = make_sensor({-1.0, 0.0, 1.0});
    const CodewordDistribution asym = honest_codeword_pmf(model, s, Hypothesis::H1);
    RandomStream rng(90210);
    const int n = 400000;
    std::vector<double> freq(4, 0.0);
    for (int i = 0; i < n; ++i) {
        const double y = sample_sparse_observation(model, s, Hypothesis::H1, rng);
        freq[static_cast<std::size_t>(quantize(y, s).index - 1)] += 1.0;
    }
    double tv = 0.0;
    for (int j = 0; j < 4; ++j) tv += std::abs(freq[static_cast<std::size_t>(j)] / n - asym[j]);
    CHECK(tv / 2.0 < 0.005);
}
