#include "qpk/svm.hpp"

#include "qpk/errors.hpp"
#include "qpk/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace qpk;
using pathkernel::GramMatrix;

namespace {

GramMatrix gram_of(const std::vector<std::vector<double>>& values) {
    GramMatrix g;
    g.rows = static_cast<int>(values.size());
    g.cols = static_cast<int>(values.front().size());
    for (const auto& row : values) {
        g.values.insert(g.values.end(), row.begin(), row.end());
    }
    g.row_ids.resize(static_cast<std::size_t>(g.rows));
    g.col_ids.resize(static_cast<std::size_t>(g.cols));
    return g;
}

// Test-only oracle: maximize the dual by projected gradient ascent with
// alternating projections onto the box and the y^T alpha = 0 hyperplane.
// Slow and simple, independent of the SMO path.
double dual_oracle(const GramMatrix& gram, const std::vector<int>& y, double c) {
    const int n = gram.rows;
    std::vector<double> a(static_cast<std::size_t>(n), c / 2.0);
    auto project = [&](std::vector<double>& v) {
        for (int pass = 0; pass < 200; ++pass) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += v[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) {
                v[static_cast<std::size_t>(i)] -= dot * y[static_cast<std::size_t>(i)] / n;
            }
            bool clipped = false;
            for (int i = 0; i < n; ++i) {
                double& vi = v[static_cast<std::size_t>(i)];
                const double before = vi;
                vi = std::clamp(vi, 0.0, c);
                clipped |= vi != before;
            }
            if (!clipped && std::abs(dot) < 1e-12) break;
        }
    };
    project(a);
    double step = 0.5;
    for (int it = 0; it < 20000; ++it) {
        std::vector<double> g(static_cast<std::size_t>(n), 1.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                g[static_cast<std::size_t>(i)] -= y[static_cast<std::size_t>(i)] *
                                                  y[static_cast<std::size_t>(j)] *
                                                  a[static_cast<std::size_t>(j)] * gram.at(i, j);
            }
        }
        for (int i = 0; i < n; ++i) {
            a[static_cast<std::size_t>(i)] += step * g[static_cast<std::size_t>(i)];
        }
        project(a);
        if (it % 2000 == 1999) step *= 0.5;
    }
    svm::SvmModel m;
    m.alpha = a;
    m.labels = y;
    return m.dual_objective(gram);
}

GramMatrix random_psd_gram(rng::Stream& s, int n) {
    // A = B B^T with random B (n x n): PSD by construction.
    std::vector<std::vector<double>> b(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : b) {
        for (double& v : row) v = s.next_gaussian();
    }
    std::vector<std::vector<double>> vals(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int k = 0; k < n; ++k) {
                dot += b[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                       b[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            }
            vals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = dot;
        }
    }
    return gram_of(vals);
}

} // namespace

TEST_CASE("identity Gram with opposite labels") {
    const auto gram = gram_of({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<int> y{1, -1};
    const auto model = svm::svm_train(gram, y, 1.0);
    CHECK(model.alpha[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.alpha[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(svm::accuracy(svm::svm_predict(model, gram), y) == doctest::Approx(1.0));
}

TEST_CASE("separable two-point problem recovers signed decision values") {
    const auto gram = gram_of({{1.0, -1.0}, {-1.0, 1.0}});
    const std::vector<int> y{-1, 1};
    const auto model = svm::svm_train(gram, y, 10.0);
    const auto f = svm::decision_values(model, gram);
    CHECK(f[0] < 0.0);
    CHECK(f[1] > 0.0);
    CHECK(f[0] == doctest::Approx(-f[1]).epsilon(1e-6));
    CHECK(svm::accuracy(svm::svm_predict(model, gram), y) == doctest::Approx(1.0));
}

TEST_CASE("input validation") {
    const auto gram = gram_of({{1.0, 0.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(svm::svm_train(gram, {1, 1}, 1.0), DegenerateLabelsError);
    CHECK_THROWS_AS(svm::svm_train(gram, {1}, 1.0), ShapeError);
    CHECK_THROWS_AS(svm::svm_train(gram, {1, -1}, 0.0), ParameterError);
    CHECK_THROWS_AS(svm::svm_train(gram, {1, 2}, 1.0), ParameterError);

    const auto asym = gram_of({{1.0, 0.5}, {-0.5, 1.0}});
    CHECK_THROWS_AS(svm::svm_train(asym, {1, -1}, 1.0), ParameterError);

    GramMatrix rect;
    rect.rows = 1;
    rect.cols = 2;
    rect.values = {1.0, 0.0};
    rect.row_ids = {0};
    rect.col_ids = {0, 1};
    CHECK_THROWS_AS(svm::svm_train(rect, {1}, 1.0), ShapeError);
}

TEST_CASE("prediction edge cases") {
    const auto gram = gram_of({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<int> y{1, -1};
    const auto model = svm::svm_train(gram, y, 1.0);

    // A zero cross-Gram row reduces the decision to the bias; sign(0) is +1.
    GramMatrix zero_row;
    zero_row.rows = 1;
    zero_row.cols = 2;
    zero_row.values = {0.0, 0.0};
    zero_row.row_ids = {0};
    zero_row.col_ids = {0, 1};
    const auto pred = svm::svm_predict(model, zero_row);
    CHECK(pred[0] == (model.bias < 0.0 ? -1 : 1));
    CHECK(pred[0] == 1); // bias is 0 here

    GramMatrix wrong;
    wrong.rows = 1;
    wrong.cols = 3;
    wrong.values = {0.0, 0.0, 0.0};
    wrong.row_ids = {0};
    wrong.col_ids = {0, 1, 2};
    CHECK_THROWS_AS(svm::svm_predict(model, wrong), ShapeError);
}

TEST_CASE("training rows of separable problems are recovered at large C") {
    rng::Stream s(21);
    for (int trial = 0; trial < 10; ++trial) {
        // 1-d points, linear kernel: separable with margin.
        const int n = 6;
        std::vector<double> xs(static_cast<std::size_t>(n));
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int label = i < n / 2 ? -1 : 1;
            xs[static_cast<std::size_t>(i)] = label * (1.0 + s.next_uniform());
            y[static_cast<std::size_t>(i)] = label;
        }
        std::vector<std::vector<double>> vals(static_cast<std::size_t>(n),
                                              std::vector<double>(static_cast<std::size_t>(n)));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                vals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(j)];
            }
        }
        const auto gram = gram_of(vals);
        const auto model = svm::svm_train(gram, y, 1000.0);
        REQUIRE(svm::accuracy(svm::svm_predict(model, gram), y) == doctest::Approx(1.0));

        // A duplicate of a non-bound support vector gets that point's label.
        for (const int sv : model.support_indices) {
            if (model.alpha[static_cast<std::size_t>(sv)] >= model.C - 1e-9) continue;
            GramMatrix dup;
            dup.rows = 1;
            dup.cols = gram.cols;
            dup.row_ids = {0};
            dup.col_ids = gram.col_ids;
            for (int j = 0; j < gram.cols; ++j) {
                dup.values.push_back(gram.at(sv, j));
            }
            REQUIRE(svm::svm_predict(model, dup)[0] == y[static_cast<std::size_t>(sv)]);
        }
    }
}

TEST_CASE("dual feasibility invariants hold at every solution") {
    rng::Stream s(22);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 6;
        auto gram = random_psd_gram(s, n);
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i < n / 2 ? -1 : 1;
        const double c = 1.0 + s.next_uniform() * 4.0;
        const auto model = svm::svm_train(gram, y, c);

        double balance = 0.0;
        for (int i = 0; i < n; ++i) {
            REQUIRE(model.alpha[static_cast<std::size_t>(i)] >= 0.0);
            REQUIRE(model.alpha[static_cast<std::size_t>(i)] <= c + 1e-12);
            balance += model.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
        }
        REQUIRE(std::abs(balance) < 1e-6);

        // KKT residuals at the solver tolerance.
        const auto f = svm::decision_values(model, gram);
        for (int i = 0; i < n; ++i) {
            const double margin = y[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
            const double a = model.alpha[static_cast<std::size_t>(i)];
            if (a < 1e-9) {
                REQUIRE(margin >= 1.0 - 1e-3 - 1e-9);
            } else if (a > c - 1e-9) {
                REQUIRE(margin <= 1.0 + 1e-3 + 1e-9);
            } else {
                REQUIRE(std::abs(margin - 1.0) <= 1e-3 + 1e-9);
            }
        }
    }
}

TEST_CASE("SMO objective matches the projected-gradient oracle") {
    rng::Stream s(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 6;
        auto gram = random_psd_gram(s, n);
        std::vector<int> y(static_cast<std::size_t>(n));
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = s.next_sign();
            pos += y[static_cast<std::size_t>(i)] > 0;
        }
        if (pos == 0) y[0] = 1;
        if (pos == n) y[0] = -1;

        const double c = 1.0;
        const auto model = svm::svm_train(gram, y, c, 1e-4, 500);
        const double smo_obj = model.dual_objective(gram);
        const double oracle_obj = dual_oracle(gram, y, c);
        REQUIRE(smo_obj >= oracle_obj - 1e-4 * std::max(1.0, std::abs(oracle_obj)));
    }
}

TEST_CASE("accuracy basics") {
    const std::vector<int> a{1, -1, 1, -1};
    const std::vector<int> b{1, -1, -1, 1};
    CHECK(svm::accuracy(a, a) == doctest::Approx(1.0));
    std::vector<int> neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    CHECK(svm::accuracy(a, neg) == doctest::Approx(0.0));
    CHECK(svm::accuracy(a, b) == doctest::Approx(0.5));
    CHECK_THROWS_AS(svm::accuracy(a, std::vector<int>{1}), ShapeError);
}

TEST_CASE("model JSON round trip") {
    const auto gram = gram_of({{1.0, 0.0}, {0.0, 1.0}});
    auto model = svm::svm_train(gram, {1, -1}, 1.0);
    model.provenance = "gram=deadbeef";
    const auto back = svm::model_from_json(svm::model_to_json(model));
    CHECK(back.alpha == model.alpha);
    CHECK(back.bias == model.bias);
    CHECK(back.support_indices == model.support_indices);
    CHECK(back.labels == model.labels);
    CHECK(back.C == model.C);
    CHECK(back.provenance == model.provenance);
}
