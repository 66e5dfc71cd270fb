#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cindex/cox.hpp"
#include "cindex/simulate.hpp"
#include "cindex/weighted_measure.hpp"

using namespace cindex;

namespace {

ObservedTriple triple1(double x, double t, int delta) {
    ObservedTriple o;
    o.x = Eigen::VectorXd::Constant(1, x);
    o.t = t;
    o.delta = delta;
    return o;
}

Dataset three_point_dataset() {
    return {triple1(0.5, 1.0, 0), triple1(0.5, 2.0, 1), triple1(0.5, 3.0, 0)};
}

Eigen::VectorXd theta1() { return Eigen::VectorXd::Constant(1, 1.0); }

double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("uncensored data gives exact 1/n weights and the empirical CDF") {
    std::mt19937_64 eng(100);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Dataset data;
    const int n = 40;
    for (int i = 0; i < n; ++i) data.push_back(triple1(unif(eng), unif(eng), 1));
    auto m = build_weighted_measure(data, theta1(), 2.0, quartic_kernel());
    REQUIRE(m.size() == n);
    for (int i = 0; i < n; ++i) CHECK(m.w[i] == 1.0 / n);
    CHECK(m.total_mass == Catch::Approx(1.0).epsilon(1e-14));

    // empirical joint CDF at a handful of query points
    for (double qx : {0.2, 0.5, 0.9}) {
        for (double qy : {0.1, 0.6, 1.0}) {
            int count = 0;
            for (const auto& o : data)
                if (o.x[0] <= qx && o.t <= qy) ++count;
            CHECK(eval_cdf(m, Eigen::VectorXd::Constant(1, qx), qy) ==
                  Catch::Approx(static_cast<double>(count) / n).epsilon(1e-14));
        }
    }
}

TEST_CASE("3-point hand dataset puts weight 1/2 on the uncensored point") {
    auto m = build_weighted_measure(three_point_dataset(), theta1(), 5.0,
                                    quartic_kernel());
    REQUIRE(m.size() == 1);
    CHECK(m.y[0] == 2.0);
    CHECK(m.w[0] == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(m.guard_activations == 0);
}

TEST_CASE("weights track the oracle built from the true censoring law") {
    // true conditional law: C | X exponential with mean gamma exp(theta0'x);
    // the oracle weights are delta_i / (n (1 - G(T_i- | g(X_i)))).
    auto weight_correlation = [](std::uint64_t seed) {
        SimScenario s;
        s.model = SimModel::m1;
        s.n = 100;
        s.gamma = 1.0;
        s.seed = seed;
        const Dataset data = simulate_dataset(s);
        const auto cox = fit_cox(data);
        auto m =
            build_weighted_measure(data, cox.theta_hat, 0.5, quartic_kernel());
        std::vector<double> fitted, oracle;
        int idx = 0;
        for (const auto& o : data) {
            if (o.delta != 1) continue;
            const double mean_c = s.gamma * std::exp(o.x.dot(s.theta0));
            const double g_true = o.t <= 0.0 ? 0.0 : 1.0 - std::exp(-o.t / mean_c);
            oracle.push_back(1.0 / (s.n * (1.0 - g_true)));
            fitted.push_back(m.w[idx]);
            ++idx;
        }
        REQUIRE(idx == m.size());
        return pearson_correlation(fitted, oracle);
    };
    std::vector<double> corrs;
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
        const double c = weight_correlation(seed);
        CHECK(c > 0.5);
        corrs.push_back(c);
    }
    CHECK(median(corrs) > 0.9);
}

TEST_CASE("km measure equals the weighted measure without censoring") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Dataset data;
    for (int i = 0; i < 25; ++i) data.push_back(triple1(unif(eng), unif(eng), 1));
    auto a = build_weighted_measure(data, theta1(), 1.0, quartic_kernel());
    auto b = build_km_measure(data);
    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) CHECK(a.w[i] == b.w[i]);
}

TEST_CASE("km measure equals the Beran measure under uniform kernel weights") {
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Dataset data;
    for (int i = 0; i < 50; ++i)
        data.push_back(triple1(unif(eng), unif(eng), unif(eng) < 0.4 ? 0 : 1));
    auto beran = build_weighted_measure(data, theta1(), 1e9, quartic_kernel());
    auto km = build_km_measure(data);
    REQUIRE(beran.size() == km.size());
    for (int i = 0; i < km.size(); ++i)
        CHECK(beran.w[i] == Catch::Approx(km.w[i]).margin(1e-12));
}

TEST_CASE("covariate-dependent censoring separates the two measures") {
    SimScenario s;
    s.n = 200;
    s.gamma = 1.0;
    s.seed = 17;
    const Dataset data = simulate_dataset(s);
    const auto cox = fit_cox(data);
    auto beran = build_weighted_measure(data, cox.theta_hat, 2.0, quartic_kernel());
    auto km = build_km_measure(data);
    REQUIRE(beran.size() == km.size());
    double max_diff = 0.0;
    for (int i = 0; i < km.size(); ++i)
        max_diff = std::max(max_diff, std::abs(beran.w[i] - km.w[i]));
    CHECK(max_diff > 1e-6);
}

TEST_CASE("eval_cdf extremes and hand-counted value") {
    Dataset data = {triple1(0.1, 0.5, 1), triple1(0.3, 0.1, 1),
                    triple1(0.5, 0.9, 1), triple1(0.7, 0.3, 1),
                    triple1(0.9, 0.7, 1)};
    auto m = build_km_measure(data);
    CHECK(eval_cdf(m, Eigen::VectorXd::Constant(1, -1.0), -1.0) == 0.0);
    CHECK(eval_cdf(m, Eigen::VectorXd::Constant(1, 2.0), 2.0) == m.total_mass);
    // x <= 0.6, y <= 0.6: points (0.1,0.5) and (0.3,0.1) -> 2/5
    CHECK(eval_cdf(m, Eigen::VectorXd::Constant(1, 0.6), 0.6) ==
          Catch::Approx(0.4).epsilon(1e-14));
    Eigen::VectorXd wrong_dim(2);
    wrong_dim << 0.5, 0.5;
    CHECK_THROWS_AS(eval_cdf(m, wrong_dim, 0.5), DimensionMismatch);
}

TEST_CASE("integrate: mass, cdf consistency, and the hand example") {
    auto m = build_weighted_measure(three_point_dataset(), theta1(), 5.0,
                                    quartic_kernel());
    CHECK(integrate(m, [](const Eigen::VectorXd&, double) { return 1.0; }) ==
          Catch::Approx(m.total_mass).epsilon(1e-14));

    const Eigen::VectorXd qx = Eigen::VectorXd::Constant(1, 0.6);
    const double qy = 2.5;
    auto indicator = [&](const Eigen::VectorXd& x, double y) {
        return (x[0] <= qx[0] && y <= qy) ? 1.0 : 0.0;
    };
    CHECK(integrate(m, indicator) ==
          Catch::Approx(eval_cdf(m, qx, qy)).epsilon(1e-14));

    auto phi = [](const Eigen::VectorXd&, double y) {
        return y <= 10.0 ? y : 0.0;
    };
    CHECK(integrate(m, phi) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eval_cdf is monotone in y and each covariate coordinate") {
    SimScenario s;
    s.n = 120;
    s.gamma = 1.0;
    s.seed = 23;
    const Dataset data = simulate_dataset(s);
    auto m = build_km_measure(data);
    std::mt19937_64 eng(55);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd x(4);
        for (int j = 0; j < 4; ++j) x[j] = unif(eng);
        const double y = 3.0 * unif(eng) - 1.0;
        const double base = eval_cdf(m, x, y);
        CHECK(eval_cdf(m, x, y + 0.3) >= base);
        for (int j = 0; j < 4; ++j) {
            Eigen::VectorXd x2 = x;
            x2[j] += 0.2;
            CHECK(eval_cdf(m, x2, y) >= base);
        }
    }
}

TEST_CASE("censored observations are structurally excluded") {
    SimScenario s;
    s.n = 150;
    s.gamma = 0.7;
    s.seed = 29;
    const Dataset data = simulate_dataset(s);
    const auto cox = fit_cox(data);
    auto m = build_weighted_measure(data, cox.theta_hat, 2.0, quartic_kernel());
    int uncensored = 0;
    for (const auto& o : data) uncensored += o.delta;
    CHECK(m.size() == uncensored);
    CHECK(m.sample_size == s.n);
    for (int i = 0; i < m.size(); ++i) CHECK(m.w[i] > 0.0);
}

TEST_CASE("integrals against the measure approach the population mean") {
    // phi(x, y) = y 1{y <= tau}: bounded; population value from a large
    // uncensored draw of the same response law.
    const double tau = 1.0;
    auto phi = [&](const Eigen::VectorXd&, double y) {
        return y <= tau ? y : 0.0;
    };
    double population = 0.0;
    {
        auto eng = make_engine(999001);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const Eigen::VectorXd beta0 = sim_beta0();
        const int big_n = 2000000;
        Eigen::VectorXd x(4);
        for (int i = 0; i < big_n; ++i) {
            for (int j = 0; j < 4; ++j) x[j] = unif(eng);
            const double y = sim_link(SimModel::m1, x.dot(beta0)) + gauss(eng);
            if (y <= tau) population += y;
        }
        population /= big_n;
    }

    auto abs_error = [&](int n, std::uint64_t seed) {
        SimScenario s;
        s.model = SimModel::m1;
        s.n = n;
        s.gamma = 1.0;
        s.seed = seed;
        const Dataset data = simulate_dataset(s);
        const auto cox = fit_cox(data);
        auto m =
            build_weighted_measure(data, cox.theta_hat, 2.0, quartic_kernel());
        return std::abs(integrate(m, phi) - population);
    };

    std::vector<double> err_small, err_large;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        err_small.push_back(abs_error(100, 1000 + seed));
        err_large.push_back(abs_error(800, 2000 + seed));
    }
    CHECK(median(err_large) < median(err_small));
}
