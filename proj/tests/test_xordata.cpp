#include "qpk/xordata.hpp"

#include "qpk/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace qpk;

TEST_CASE("zero-noise generation keeps the raw signs") {
    const auto ds = xordata::generate(4, 2, 0.0, 50, 11);
    for (int i = 0; i < ds.size(); ++i) {
        const auto& p = ds.points[static_cast<std::size_t>(i)];
        REQUIRE(p.size() == 4);
        int prod = 1;
        for (int j = 0; j < 2; ++j) {
            REQUIRE(std::abs(p[static_cast<std::size_t>(j)]) == 1.0);
            prod *= p[static_cast<std::size_t>(j)] > 0 ? 1 : -1;
        }
        REQUIRE(ds.labels[static_cast<std::size_t>(i)] == prod);
        REQUIRE(p[2] == 0.0);
        REQUIRE(p[3] == 0.0);
    }
}

TEST_CASE("labels come from the recorded clean signs, not the noisy values") {
    const auto ds = xordata::generate(3, 2, 2.5, 200, 12);
    for (int i = 0; i < ds.size(); ++i) {
        int prod = 1;
        for (const int s : ds.clean_signs[static_cast<std::size_t>(i)]) prod *= s;
        REQUIRE(ds.labels[static_cast<std::size_t>(i)] == prod);
    }
}

TEST_CASE("padding coordinates are exactly zero") {
    const auto ds = xordata::generate(10, 2, 0.5, 32, 13);
    for (const auto& p : ds.points) {
        for (std::size_t j = 2; j < 10; ++j) {
            REQUIRE(p[j] == 0.0);
        }
    }
}

TEST_CASE("generation validates arguments and is seed deterministic") {
    CHECK_THROWS_AS(xordata::generate(2, 3, 0.1, 4, 1), ParameterError);
    CHECK_THROWS_AS(xordata::generate(2, 0, 0.1, 4, 1), ParameterError);
    CHECK_THROWS_AS(xordata::generate(2, 2, -0.1, 4, 1), ParameterError);
    CHECK_THROWS_AS(xordata::generate(2, 2, 0.1, 0, 1), ParameterError);

    const auto a = xordata::generate(4, 2, 0.3, 16, 5);
    const auto b = xordata::generate(4, 2, 0.3, 16, 5);
    CHECK(a.points == b.points);
    CHECK(a.labels == b.labels);
    CHECK(a.points != xordata::generate(4, 2, 0.3, 16, 6).points);
}

TEST_CASE("variance reading of the noise level") {
    // With noise_is_variance the spread is sqrt(noise); at noise = 4 the
    // std-dev reading would wander four times as far as the variance reading.
    const auto var_ds = xordata::generate(1, 1, 4.0, 4000, 7, true);
    const auto std_ds = xordata::generate(1, 1, 4.0, 4000, 7, false);
    auto spread = [](const xordata::LabeledDataset& ds) {
        double acc = 0.0;
        for (int i = 0; i < ds.size(); ++i) {
            const double e = ds.points[static_cast<std::size_t>(i)][0] -
                             ds.clean_signs[static_cast<std::size_t>(i)][0];
            acc += e * e;
        }
        return std::sqrt(acc / ds.size());
    };
    CHECK(spread(var_ds) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(spread(std_ds) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("oracle label") {
    const std::vector<double> x{0.9, -1.1, 0.3, 0.0};
    CHECK(xordata::oracle_label(x, 2) == -1);
    CHECK(xordata::oracle_label(std::vector<double>{-1.0, -1.0}, 2) == 1);
    CHECK(xordata::oracle_label(std::vector<double>{0.0, 1.0}, 2) == 1); // sign(0) -> +1
    CHECK_THROWS_AS(xordata::oracle_label(std::vector<double>{1.0}, 2), ParameterError);
}

TEST_CASE("oracle accuracy at low noise is essentially perfect") {
    // Per-coordinate flip probability Phi(-1/0.1) ~ 7.6e-24.
    const auto ds = xordata::generate(4, 2, 0.1, 100000, 31);
    CHECK(xordata::oracle_accuracy(ds) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("oracle accuracy is exactly 1 at zero noise") {
    for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto ds = xordata::generate(5, 3, 0.0, 500, seed);
        REQUIRE(xordata::oracle_accuracy(ds) == 1.0);
    }
}

TEST_CASE("label balance") {
    const auto ds = xordata::generate(4, 2, 0.7, 10000, 17);
    double mean = 0.0;
    for (const int y : ds.labels) mean += y;
    mean /= ds.size();
    CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("oracle accuracy does not increase with noise") {
    double prev = 2.0;
    for (const double eps : {0.1, 0.5, 1.0}) {
        const auto ds = xordata::generate(4, 2, eps, 100000, 23);
        const double acc = xordata::oracle_accuracy(ds);
        // 3-sigma slack on the binomial fluctuation at n = 1e5.
        REQUIRE(acc <= prev + 3.0 * 0.5 / std::sqrt(100000.0));
        prev = acc;
    }
}

TEST_CASE("split is an exhaustive seed-deterministic partition") {
    const auto ds = xordata::generate(4, 2, 0.2, 32, 19);
    const auto [train, test] = xordata::split(ds, 0.5, 101);
    CHECK(train.size() == 16);
    CHECK(test.size() == 16);

    auto key = [](const std::vector<double>& p, int label) {
        std::string k = std::to_string(label);
        for (const double v : p) k += "," + std::to_string(v);
        return k;
    };
    std::map<std::string, int> counts;
    for (int i = 0; i < ds.size(); ++i) {
        counts[key(ds.points[static_cast<std::size_t>(i)], ds.labels[static_cast<std::size_t>(i)])]++;
    }
    for (int i = 0; i < train.size(); ++i) {
        counts[key(train.points[static_cast<std::size_t>(i)], train.labels[static_cast<std::size_t>(i)])]--;
    }
    for (int i = 0; i < test.size(); ++i) {
        counts[key(test.points[static_cast<std::size_t>(i)], test.labels[static_cast<std::size_t>(i)])]--;
    }
    for (const auto& [k, v] : counts) {
        REQUIRE(v == 0);
    }

    const auto [train2, test2] = xordata::split(ds, 0.5, 101);
    CHECK(train2.points == train.points);
    CHECK(test2.points == test.points);
    CHECK(xordata::split(ds, 0.5, 102).first.points != train.points);
}

TEST_CASE("split rejects degenerate fractions") {
    const auto ds = xordata::generate(2, 2, 0.0, 4, 3);
    CHECK_THROWS_AS(xordata::split(ds, 0.0, 1), ParameterError);
    CHECK_THROWS_AS(xordata::split(ds, 1.0, 1), ParameterError);
    CHECK_THROWS_AS(xordata::split(ds, 0.05, 1), ParameterError); // rounds to an empty side
}

TEST_CASE("dataset CSV round trip") {
    const auto ds = xordata::generate(3, 2, 0.4, 12, 29);
    const auto back = xordata::dataset_from_csv(xordata::dataset_to_csv(ds));
    CHECK(back.points == ds.points);
    CHECK(back.labels == ds.labels);
    CHECK(back.meta.d == 3);
}
