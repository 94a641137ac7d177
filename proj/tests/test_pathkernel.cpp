#include "qpk/pathkernel.hpp"

#include "qpk/errors.hpp"
#include "qpk/optim.hpp"
#include "qpk/qnn.hpp"
#include "qpk/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace qpk;
using pathkernel::GramMatrix;
using pathkernel::KernelKind;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::vector<double>> random_points(rng::Stream& s, int n, int d) {
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) {
        p.resize(static_cast<std::size_t>(d));
        for (double& v : p) v = (s.next_uniform() * 2.0 - 1.0) * kPi;
    }
    return pts;
}

optim::ParameterTrajectory short_trained_trajectory(const qnn::QnnModel& model,
                                                    const std::vector<std::vector<double>>& pts,
                                                    const std::vector<int>& labels, int epochs) {
    optim::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = 40;
    return optim::train(pts, labels, model, cfg);
}

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

} // namespace

TEST_CASE("tangent kernel of the single-qubit model") {
    const qnn::SingleQubitModel model;
    const std::vector<double> x{kPi / 8};
    const std::vector<double> theta{0.0};
    // gradient is -2 sin(2(theta+x)); at theta=0, x=pi/8 the square is 2.
    CHECK(pathkernel::qntk(x, x, theta, model) == doctest::Approx(2.0).epsilon(1e-12));

    rng::Stream s(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> a{(s.next_uniform() * 2 - 1) * kPi};
        const std::vector<double> b{(s.next_uniform() * 2 - 1) * kPi};
        const std::vector<double> t{(s.next_uniform() * 2 - 1) * kPi};
        REQUIRE(pathkernel::qntk(a, a, t, model) >= 0.0);
        REQUIRE(pathkernel::qntk(a, b, t, model) ==
                doctest::Approx(pathkernel::qntk(b, a, t, model)).epsilon(1e-14));
    }
}

TEST_CASE("tangent Gram closed-form example") {
    const qnn::SingleQubitModel model;
    const std::vector<std::vector<double>> pts{{0.0}, {kPi / 8}};
    const std::vector<double> theta{0.0};
    const auto g = pathkernel::qntk_gram(pts, pts, theta, model);
    CHECK(g.at(0, 0) == doctest::Approx(0.0).epsilon(1e-14)); // grad at x=0 is -2 sin 0 = 0
    CHECK(g.at(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.at(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.at(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("square tangent Gram is symmetric PSD, including the 1x1 case") {
    qnn::QnnConfig mc;
    mc.d = 3;
    mc.layers = 2;
    const qnn::QnnModel model(mc);
    rng::Stream s(12);
    const auto one = random_points(s, 1, 3);
    const auto theta = optim::init_params(4, 5);
    const auto g1 = pathkernel::qntk_gram(one, one, theta, model);
    CHECK(g1.rows == 1);
    CHECK(g1.at(0, 0) >= 0.0);

    const auto pts = random_points(s, 6, 3);
    const auto g = pathkernel::qntk_gram(pts, pts, theta, model);
    const auto rep = pathkernel::psd_report(g);
    CHECK(rep.symmetric_defect < 1e-10);
    CHECK(rep.min_eigenvalue >= -1e-8 * rep.max_eigenvalue);
}

TEST_CASE("gradient caching matches the naive pairwise evaluation") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 2;
    const qnn::QnnModel model(mc);
    rng::Stream s(9);
    const auto rows = random_points(s, 4, 2);
    const auto cols = random_points(s, 3, 2);
    const auto theta = optim::init_params(4, 6);

    const auto g = pathkernel::qntk_gram(rows, cols, theta, model);
    for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) {
            const double naive = pathkernel::qntk(rows[static_cast<std::size_t>(i)],
                                                  cols[static_cast<std::size_t>(j)], theta, model);
            REQUIRE(std::abs(g.at(i, j) - naive) < 1e-14);
        }
    }
}

TEST_CASE("frozen trajectory collapses the path kernel onto the tangent kernel") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 2;
    const qnn::QnnModel model(mc);
    rng::Stream s(14);
    const auto pts = random_points(s, 5, 2);
    const auto theta = optim::init_params(4, 2);

    optim::ParameterTrajectory frozen;
    frozen.thetas.assign(8, theta);
    frozen.losses.assign(8, 0.5);

    const auto qntk = pathkernel::qntk_gram(pts, pts, theta, model);
    const auto qpk = pathkernel::qpk_gram(pts, pts, frozen, model);
    REQUIRE(qpk.values.size() == qntk.values.size());
    for (std::size_t i = 0; i < qpk.values.size(); ++i) {
        REQUIRE(qpk.values[i] == qntk.values[i]); // bitwise via the incremental mean
    }
}

TEST_CASE("length-two trajectory equals the tangent Gram at theta(0)") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 1;
    const qnn::QnnModel model(mc);
    rng::Stream s(15);
    const auto pts = random_points(s, 3, 2);
    optim::ParameterTrajectory traj;
    traj.thetas = {optim::init_params(2, 1), optim::init_params(2, 2)};
    traj.losses = {1.0, 0.9};

    const auto qpk = pathkernel::qpk_gram(pts, pts, traj, model);
    const auto qntk0 = pathkernel::qntk_gram(pts, pts, traj.thetas.front(), model);
    CHECK(qpk.values == qntk0.values);

    optim::ParameterTrajectory empty;
    empty.thetas = {optim::init_params(2, 1)};
    empty.losses = {1.0};
    CHECK_THROWS_AS(pathkernel::qpk_gram(pts, pts, empty, model), ProvenanceError);
}

TEST_CASE("path kernel entries stay within the per-epoch range") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 2;
    const qnn::QnnModel model(mc);
    rng::Stream s(16);
    const auto pts = random_points(s, 4, 2);
    const std::vector<int> labels{1, -1, 1, -1};
    const auto traj = short_trained_trajectory(model, pts, labels, 12);

    const auto qpk = pathkernel::qpk_gram(pts, pts, traj, model);
    std::vector<double> lo(qpk.values.size(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(qpk.values.size(), -std::numeric_limits<double>::infinity());
    for (int t = 0; t < traj.epochs(); ++t) {
        const auto g = pathkernel::qntk_gram(pts, pts, traj.thetas[static_cast<std::size_t>(t)],
                                             model);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            lo[i] = std::min(lo[i], g.values[i]);
            hi[i] = std::max(hi[i], g.values[i]);
        }
    }
    for (std::size_t i = 0; i < qpk.values.size(); ++i) {
        const double slack = 1e-12 * std::max(1.0, std::abs(hi[i]));
        REQUIRE(qpk.values[i] >= lo[i] - slack);
        REQUIRE(qpk.values[i] <= hi[i] + slack);
    }

    // Job count must not change a single bit.
    const auto qpk4 = pathkernel::qpk_gram(pts, pts, traj, model, false, 4);
    CHECK(qpk4.values == qpk.values);

    const auto rep = pathkernel::psd_report(qpk);
    CHECK(rep.symmetric_defect < 1e-10);
    CHECK(rep.min_eigenvalue >= -1e-8 * rep.max_eigenvalue);
}

TEST_CASE("effective path kernel suppression") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 1;
    const qnn::QnnModel model(mc);
    rng::Stream s(18);
    const auto pts = random_points(s, 3, 2);

    // Trajectory frozen after epoch 2: epochs 0,1,2 move, the rest repeat.
    optim::ParameterTrajectory traj;
    traj.thetas = {{0.1, 0.2}, {0.5, -0.1}, {0.9, 0.4}, {0.9, 0.4}, {0.9, 0.4}, {0.9, 0.4}};
    traj.losses.assign(6, 0.0);

    const auto qpk = pathkernel::qpk_gram(pts, pts, traj, model);
    const auto eff0 = pathkernel::effective_qpk_gram(pts, pts, traj, model, 0.0);
    CHECK(eff0.values == qpk.values); // rel_tol = 0 keeps everything

    // Frozen after epoch 2: only the first three per-epoch Grams survive.
    const auto eff = pathkernel::effective_qpk_gram(pts, pts, traj, model, 1e-6);
    optim::ParameterTrajectory first3;
    first3.thetas = {traj.thetas[0], traj.thetas[1], traj.thetas[2]};
    first3.losses.assign(3, 0.0);
    const auto mean3 = pathkernel::qpk_gram(pts, pts, first3, model, true);
    CHECK(eff.values == mean3.values);

    const auto only0 = pathkernel::effective_qpk_gram(
        pts, pts, traj, model, std::numeric_limits<double>::infinity());
    const auto qntk0 = pathkernel::qntk_gram(pts, pts, traj.thetas.front(), model);
    CHECK(only0.values == qntk0.values);

    CHECK_THROWS_AS(pathkernel::effective_qpk_gram(pts, pts, traj, model, -1.0), ParameterError);
}

TEST_CASE("psd_report on hand-checked matrices") {
    auto id = gram_of({{1.0, 0.0}, {0.0, 1.0}});
    auto rep = pathkernel::psd_report(id);
    CHECK(rep.min_eigenvalue == doctest::Approx(1.0));
    CHECK(rep.max_eigenvalue == doctest::Approx(1.0));
    CHECK(rep.symmetric_defect == doctest::Approx(0.0));

    rep = pathkernel::psd_report(gram_of({{2.0, 0.0}, {0.0, 0.0}}));
    CHECK(rep.min_eigenvalue == doctest::Approx(0.0));
    CHECK(rep.max_eigenvalue == doctest::Approx(2.0));

    // v v^T with v = [1, 2]: eigenvalues 0 and |v|^2 = 5.
    rep = pathkernel::psd_report(gram_of({{1.0, 2.0}, {2.0, 4.0}}));
    CHECK(rep.min_eigenvalue == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.max_eigenvalue == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(rep.symmetric_defect == doctest::Approx(0.0));

    GramMatrix rect;
    rect.rows = 1;
    rect.cols = 2;
    rect.values = {1.0, 2.0};
    rect.row_ids = {0};
    rect.col_ids = {0, 1};
    CHECK_THROWS_AS(pathkernel::psd_report(rect), ShapeError);
}

TEST_CASE("Gram CSV round trip") {
    qnn::QnnConfig mc;
    mc.d = 2;
    mc.layers = 1;
    const qnn::QnnModel model(mc);
    rng::Stream s(19);
    const auto rows = random_points(s, 3, 2);
    const auto cols = random_points(s, 2, 2);
    const auto g = pathkernel::qntk_gram(rows, cols, optim::init_params(2, 3), model);

    const auto back = pathkernel::gram_from_csv(pathkernel::gram_to_csv(g));
    CHECK(back.rows == g.rows);
    CHECK(back.cols == g.cols);
    CHECK(back.values == g.values);
    CHECK(back.col_ids == g.col_ids);
}

TEST_CASE("Gram block slicing") {
    auto g = gram_of({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {7.0, 8.0, 9.0}});
    const auto b = g.block(1, 3, 0, 2);
    CHECK(b.rows == 2);
    CHECK(b.cols == 2);
    CHECK(b.at(0, 0) == 4.0);
    CHECK(b.at(1, 1) == 8.0);
    CHECK_THROWS_AS(g.block(0, 4, 0, 1), ShapeError);
}
