#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>
#include <cmath>
#include <random>

#include "cindex/beran.hpp"
#include "oracles.hpp"

using namespace cindex;

namespace {

ObservedTriple triple1(double x, double t, int delta) {
    ObservedTriple o;
    o.x = Eigen::VectorXd::Constant(1, x);
    o.t = t;
    o.delta = delta;
    return o;
}

// (T, delta) = (1,0), (2,1), (3,0) with equal covariates so every kernel
// weight is identical.
Dataset three_point_dataset() {
    return {triple1(0.5, 1.0, 0), triple1(0.5, 2.0, 1), triple1(0.5, 3.0, 0)};
}

Eigen::VectorXd theta1() { return Eigen::VectorXd::Constant(1, 1.0); }

Dataset random_dataset(std::mt19937_64& eng, int n, double censor_prob) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.5, 0.6);
    Dataset data;
    for (int i = 0; i < n; ++i) {
        ObservedTriple o;
        o.x = Eigen::VectorXd::Constant(1, unif(eng));
        o.t = gauss(eng);
        o.delta = unif(eng) < censor_prob ? 0 : 1;
        data.push_back(std::move(o));
    }
    return data;
}

}  // namespace

TEST_CASE("no censoring events gives the zero function") {
    Dataset data = {triple1(0.1, 1.0, 1), triple1(0.7, 2.0, 1),
                    triple1(0.4, 0.5, 1)};
    auto curve = beran_fit(data, theta1(), 0.4, 1.0, quartic_kernel());
    CHECK(curve.jump_times.empty());
    CHECK(beran_eval(curve, 10.0) == 0.0);
    CHECK(beran_eval(curve, -10.0) == 0.0);
}

TEST_CASE("hand Kaplan-Meier values on the 3-point dataset") {
    Dataset data = three_point_dataset();
    auto curve = beran_fit(data, theta1(), 0.5, 5.0, quartic_kernel());
    REQUIRE(curve.jump_times.size() == 2);
    CHECK(beran_eval(curve, 1.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(beran_eval(curve, 2.9) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(beran_eval(curve, 3.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(beran_eval(curve, 0.99) == 0.0);
}

TEST_CASE("left-limit evaluation") {
    Dataset data = three_point_dataset();
    auto curve = beran_fit(data, theta1(), 0.5, 5.0, quartic_kernel());
    CHECK(beran_eval_left(curve, 1.0) == 0.0);
    CHECK(beran_eval_left(curve, 3.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(beran_eval_left(curve, 2.5) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("matches the direct product formula with nonuniform weights") {
    std::mt19937_64 eng(2024);
    for (int rep = 0; rep < 10; ++rep) {
        Dataset data = random_dataset(eng, 50, 0.4);
        const double z = 0.5;
        const double a_n = 0.35;
        auto curve = beran_fit(data, theta1(), z, a_n, quartic_kernel());
        for (double t : {-1.0, 0.2, 0.5, 0.8, 1.3, 5.0}) {
            const double direct =
                oracles::beran_direct(data, theta1(), z, a_n, quartic_kernel(), t);
            CHECK(beran_eval(curve, t) == Catch::Approx(direct).margin(1e-12));
        }
    }
}

TEST_CASE("degenerates to the textbook Kaplan-Meier under uniform weights") {
    std::mt19937_64 eng(31);
    for (int rep = 0; rep < 25; ++rep) {
        Dataset data = random_dataset(eng, 2 + rep, 0.5);
        // gigantic bandwidth: all kernel weights equal K(~0)
        auto curve = beran_fit(data, theta1(), 0.5, 1e9, quartic_kernel());
        auto km = oracles::textbook_km_censoring(data);
        REQUIRE(curve.jump_times.size() == km.size());
        for (std::size_t k = 0; k < km.size(); ++k) {
            CHECK(curve.jump_times[k] == km[k].time);
            CHECK(curve.jump_values[k] == Catch::Approx(km[k].cdf).margin(1e-12));
        }
    }
}

TEST_CASE("km_censoring_fit equals the textbook oracle") {
    std::mt19937_64 eng(37);
    Dataset data = random_dataset(eng, 60, 0.35);
    auto curve = km_censoring_fit(data);
    auto km = oracles::textbook_km_censoring(data);
    REQUIRE(curve.jump_times.size() == km.size());
    for (std::size_t k = 0; k < km.size(); ++k)
        CHECK(curve.jump_values[k] == Catch::Approx(km[k].cdf).margin(1e-12));
}

TEST_CASE("curves are monotone with values in [0,1]") {
    std::mt19937_64 eng(5150);
    for (int rep = 0; rep < 20; ++rep) {
        Dataset data = random_dataset(eng, 40, 0.5);
        auto curve = beran_fit(data, theta1(), 0.5, 0.5, quartic_kernel());
        double prev = 0.0;
        for (std::size_t k = 0; k < curve.jump_values.size(); ++k) {
            CHECK(curve.jump_values[k] >= prev);
            CHECK(curve.jump_values[k] <= 1.0);
            prev = curve.jump_values[k];
        }
    }
}

TEST_CASE("zero-weight observations can be deleted without effect") {
    std::mt19937_64 eng(8);
    Dataset data = random_dataset(eng, 50, 0.4);
    const double z = 0.3, a_n = 0.2;
    auto full_curve = beran_fit(data, theta1(), z, a_n, quartic_kernel());
    Dataset local;
    for (const auto& o : data)
        if (std::abs(o.x[0] - z) < a_n) local.push_back(o);
    REQUIRE(local.size() < data.size());
    auto local_curve = beran_fit(local, theta1(), z, a_n, quartic_kernel());
    REQUIRE(full_curve.jump_times == local_curve.jump_times);
    for (std::size_t k = 0; k < full_curve.jump_values.size(); ++k)
        CHECK(full_curve.jump_values[k] == local_curve.jump_values[k]);
}

TEST_CASE("huge bandwidth makes the curve independent of z") {
    std::mt19937_64 eng(12);
    Dataset data = random_dataset(eng, 30, 0.5);
    auto c1 = beran_fit(data, theta1(), 0.1, 1e9, quartic_kernel());
    auto c2 = beran_fit(data, theta1(), 0.9, 1e9, quartic_kernel());
    REQUIRE(c1.jump_times == c2.jump_times);
    for (std::size_t k = 0; k < c1.jump_values.size(); ++k)
        CHECK(c1.jump_values[k] == Catch::Approx(c2.jump_values[k]).margin(1e-12));
}

TEST_CASE("empty kernel window raises EmptyWindow") {
    Dataset data = three_point_dataset();
    CHECK_THROWS_AS(beran_fit(data, theta1(), 25.0, 0.5, quartic_kernel()),
                    EmptyWindow);
}

TEST_CASE("epanechnikov is rejected as a conditional-distribution kernel") {
    Dataset data = three_point_dataset();
    CHECK_THROWS_AS(beran_fit(data, theta1(), 0.5, 1.0, epanechnikov_kernel()),
                    Error);
}

TEST_CASE("tied censored observations share the risk-set denominator") {
    // two censorings at t=2, risk set {T_j >= 2} has size 2 with unit
    // weights: each factor is (1 - 1/2), per-observation as in the product
    Dataset data = {triple1(0.5, 1.0, 1), triple1(0.5, 2.0, 0),
                    triple1(0.5, 2.0, 0)};
    auto curve = beran_fit(data, theta1(), 0.5, 1e9, quartic_kernel());
    REQUIRE(curve.jump_times.size() == 1);
    const double expected = 1.0 - 0.5 * 0.5;
    CHECK(curve.jump_values[0] == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("a death tied with a censoring stays in its risk set") {
    // censoring at t=2 has risk set {death at 2, censoring at 2}: factor 1/2
    Dataset data = {triple1(0.5, 2.0, 1), triple1(0.5, 2.0, 0)};
    auto curve = beran_fit(data, theta1(), 0.5, 1e9, quartic_kernel());
    REQUIRE(curve.jump_times.size() == 1);
    CHECK(curve.jump_values[0] == Catch::Approx(0.5).epsilon(1e-14));
}
