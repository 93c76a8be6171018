#include "graspvae/errors.hpp"
#include "graspvae/kpca.hpp"
#include "graspvae/task.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace graspvae;

namespace {

// Normalized 8-parameter configurations of one pose's grasp manifold.
Eigen::MatrixXd manifold_points(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> counts = {count, 0};
    const auto records = generate_primitive_records(SyntheticGraspTask::default_task(), counts, rng);
    const auto stats = NormalizationStats::from_records(records);
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(records.size()), 8);
    for (std::size_t i = 0; i < records.size(); ++i)
        pts.row(static_cast<Eigen::Index>(i)) = normalize_grasp(records[i].grasp, stats).transpose();
    return pts;
}

double max_spectrum_gap(const SpectrumReport& a, const SpectrumReport& b) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i)
        gap = std::max(gap, std::abs(a.eigenvalues[i] - b.eigenvalues[i]));
    return gap;
}

}  // namespace

TEST_CASE("points on a line have dimension 1 under the linear kernel") {
    Eigen::MatrixXd pts(50, 8);
    Eigen::RowVectorXd dir(8);
    dir << 1, -2, 0.5, 3, 0, 1, -1, 2;
    for (int i = 0; i < 50; ++i) pts.row(i) = 0.3 * dir * (i - 20) + Eigen::RowVectorXd::Constant(8, 0.1);
    KpcaConfig cfg;
    cfg.kernel = Kernel::linear;
    const auto r = estimate_dimension(pts, cfg);
    CHECK(r.dimension == 1);
    CHECK(r.cumulative.front() == doctest::Approx(1.0));
    CHECK(r.gamma == 0.0);
}

TEST_CASE("grasp manifold has about three dimensions") {
    const auto r = estimate_dimension(manifold_points(200, 3));
    CHECK(r.dimension >= 2);
    CHECK(r.dimension <= 4);
    CHECK_FALSE(r.degenerate);
    CHECK(r.gamma > 0.0);
}

TEST_CASE("spectrum shape") {
    const auto r = estimate_dimension(manifold_points(80, 4));
    REQUIRE(r.eigenvalues.size() == 80);
    CHECK(std::is_sorted(r.eigenvalues.rbegin(), r.eigenvalues.rend()));
    CHECK(r.eigenvalues.back() >= 0.0);
    CHECK(std::is_sorted(r.cumulative.begin(), r.cumulative.end()));
    CHECK(r.cumulative.back() == doctest::Approx(1.0));
    CHECK(r.cumulative[static_cast<std::size_t>(r.dimension - 1)] >= 0.9);
    if (r.dimension > 1) CHECK(r.cumulative[static_cast<std::size_t>(r.dimension - 2)] < 0.9);
}

TEST_CASE("identical points are degenerate") {
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Constant(10, 8, 0.4);
    for (auto k : {Kernel::rbf, Kernel::linear}) {
        KpcaConfig cfg;
        cfg.kernel = k;
        const auto r = estimate_dimension(pts, cfg);
        CHECK(r.degenerate);
        CHECK(r.dimension == 0);
        for (double e : r.eigenvalues) CHECK(std::abs(e) < 1e-12);
    }
}

TEST_CASE("spectrum is invariant to order and to rigid shifts") {
    const Eigen::MatrixXd pts = manifold_points(60, 5);
    const auto base = estimate_dimension(pts);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(pts.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(2);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(pts.rows(), pts.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.row(static_cast<Eigen::Index>(i)) = pts.row(perm[i]);
    CHECK(max_spectrum_gap(base, estimate_dimension(shuffled)) < 1e-9);

    Eigen::RowVectorXd shift(8);
    shift << 3, -1, 0.5, 2, 7, -4, 0.1, 1;
    const Eigen::MatrixXd moved = pts.rowwise() + shift;
    CHECK(max_spectrum_gap(base, estimate_dimension(moved)) < 1e-9);
}

TEST_CASE("dimension grows with the threshold") {
    const auto r = estimate_dimension(manifold_points(100, 6));
    int last = 0;
    for (double th = 0.05; th <= 1.0 + 1e-12; th += 0.05) {
        const int d = r.dimension_for(std::min(th, 1.0));
        CHECK(d >= last);
        last = d;
    }
    KpcaConfig cfg;
    cfg.threshold = 0.99;
    CHECK(estimate_dimension(manifold_points(100, 6), cfg).dimension >= r.dimension);
}

TEST_CASE("linear kernel eigenvalues are the scatter-matrix eigenvalues") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n;
    Eigen::MatrixXd x(12, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    x = x.rowwise() - x.colwise().mean();

    KpcaConfig cfg;
    cfg.kernel = Kernel::linear;
    const auto r = estimate_dimension(x, cfg);
    // covariance X^T X / n, times n
    const auto expected = oracle::jacobi_eigenvalues(x.transpose() * x);
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(r.eigenvalues[i] - expected[i]) < 1e-8);
    for (std::size_t i = expected.size(); i < r.eigenvalues.size(); ++i) CHECK(std::abs(r.eigenvalues[i]) < 1e-8);

    // and the centered kernel itself agrees with the Jacobi oracle
    const auto kernel_ev = oracle::jacobi_eigenvalues(center_kernel(x * x.transpose()));
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(kernel_ev[i] - expected[i]) < 1e-8);
}

TEST_CASE("centering removes row and column means") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    Eigen::MatrixXd k(6, 6);
    for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = u(rng);
    k = (k + k.transpose()).eval();
    const Eigen::MatrixXd c = center_kernel(k);
    CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("input errors") {
    CHECK_THROWS_AS(estimate_dimension(Eigen::MatrixXd::Ones(2, 8)), UsageError);
    Eigen::MatrixXd bad = manifold_points(10, 1);
    bad(3, 2) = std::nan("");
    CHECK_THROWS_AS(estimate_dimension(bad), NumericError);
    KpcaConfig cfg;
    cfg.threshold = 0.0;
    CHECK_THROWS_AS(estimate_dimension(manifold_points(10, 1), cfg), ValidationError);
    cfg = {};
    cfg.gamma = -1.0;
    CHECK_THROWS_AS(estimate_dimension(manifold_points(10, 1), cfg), ValidationError);
}

TEST_CASE("spectrum json") {
    const auto r = estimate_dimension(manifold_points(20, 2));
    const auto j = spectrum_to_json(r);
    CHECK(j.at("dimension") == r.dimension);
    CHECK(j.at("eigenvalues").size() == 20);
}
