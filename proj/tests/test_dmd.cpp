#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <complex>
#include <filesystem>

#include "pdmd/dmd.hpp"
#include "pdmd/rng.hpp"

using namespace pdmd;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.next_gaussian();
    }
    return m;
}

/// x_{k+1} = A x_k for m+1 columns; the closed-form oracle behind the
/// eigenvalue-recovery checks.
Eigen::MatrixXd linear_orbit(const Eigen::MatrixXd& a, const Eigen::VectorXd& x0,
                             Eigen::Index count) {
    Eigen::MatrixXd data(x0.size(), count);
    data.col(0) = x0;
    for (Eigen::Index k = 1; k < count; ++k) {
        data.col(k) = a * data.col(k - 1);
    }
    return data;
}

TimeGrid grid_of(Eigen::Index count) { return TimeGrid{0.0, 1.0, static_cast<std::size_t>(count)}; }

bool contains_eigenvalue(const Eigen::VectorXcd& values, std::complex<double> target,
                         double tol) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::abs(values(i) - target) <= tol) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST_CASE("split_lr shifts by one column") {
    const Eigen::MatrixXd s = random_matrix(4, 3, 1);
    const SplitPair p = split_lr(s);
    CHECK(p.left.cols() == 2);
    CHECK(p.left == s.leftCols(2));
    CHECK(p.right == s.rightCols(2));
    CHECK(p.left.col(1) == p.right.col(0));
}

TEST_CASE("split_lr of two columns gives single-column parts") {
    const Eigen::MatrixXd s = random_matrix(4, 2, 2);
    const SplitPair p = split_lr(s);
    CHECK(p.left.cols() == 1);
    CHECK(p.right.cols() == 1);
}

TEST_CASE("split_lr needs two columns") {
    CHECK_THROWS_AS(split_lr(Eigen::MatrixXd::Ones(4, 1)), DimensionError);
}

TEST_CASE("truncated_svd of the identity") {
    const TruncatedSvd svd = truncated_svd(Eigen::MatrixXd::Identity(3, 3), 3);
    REQUIRE(svd.rank() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(svd.singular(i) == doctest::Approx(1.0));
    }
}

TEST_CASE("truncated_svd keeps the leading values of a diagonal matrix") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 3.0, 2.0, 1.0;
    const TruncatedSvd svd = truncated_svd(d, 2);
    REQUIRE(svd.rank() == 2);
    CHECK(svd.singular(0) == doctest::Approx(3.0));
    CHECK(svd.singular(1) == doctest::Approx(2.0));
}

TEST_CASE("truncated_svd floors away numerically dead directions") {
    const Eigen::MatrixXd x = random_matrix(20, 2, 3);
    const Eigen::MatrixXd y = random_matrix(20, 2, 4);
    const Eigen::MatrixXd m = x * y.transpose(); // exact rank 2
    const TruncatedSvd svd = truncated_svd(m, 5, 1e-12);
    REQUIRE(svd.rank() == 2);
    const Eigen::MatrixXd rebuilt =
        svd.modes_left * svd.singular.asDiagonal() * svd.modes_right.transpose();
    CHECK((m - rebuilt).norm() <= 1e-10 * svd.singular(0));
    CHECK((svd.modes_left.transpose() * svd.modes_left - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
    CHECK((svd.modes_right.transpose() * svd.modes_right - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
}

TEST_CASE("truncated_svd validates the rank and the input") {
    CHECK_THROWS_AS(truncated_svd(Eigen::MatrixXd::Ones(3, 3), 0), DimensionError);
    CHECK_THROWS_AS(truncated_svd(Eigen::MatrixXd::Ones(3, 3), 4), DimensionError);
    CHECK_THROWS_AS(truncated_svd(Eigen::MatrixXd::Zero(3, 3), 2), DegenerateInputError);
}

TEST_CASE("exact_dmd recovers a diagonal linear system") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a.diagonal() << 0.9, 0.5;
    const Eigen::MatrixXd data = linear_orbit(a, Eigen::Vector2d(1.0, 1.0), 11);
    const DmdModel model = exact_dmd(data, grid_of(11), 2);

    REQUIRE(model.rank == 2);
    CHECK(std::abs(model.eigvals(0) - std::complex<double>(0.9, 0.0)) < 1e-10);
    CHECK(std::abs(model.eigvals(1) - std::complex<double>(0.5, 0.0)) < 1e-10);

    const Reconstruction rec = reconstruct(model, 0, 11);
    CHECK(frob_error(data, rec.values) <= 1e-12);
    CHECK(rec.max_imag <= 1e-12);

    // k = 3 by direct powers of the recursion.
    const Reconstruction at3 = reconstruct(model, 3, 1);
    CHECK(at3.values(0, 0) == doctest::Approx(0.729).epsilon(1e-9));
    CHECK(at3.values(1, 0) == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("exact_dmd on scalar geometric growth") {
    Eigen::MatrixXd data(1, 8);
    for (int k = 0; k < 8; ++k) {
        data(0, k) = std::pow(2.0, k);
    }
    const DmdModel model = exact_dmd(data, grid_of(8), 1);
    REQUIRE(model.rank == 1);
    CHECK(std::abs(model.eigvals(0) - std::complex<double>(2.0, 0.0)) < 1e-12);
    // Unit-norm positively phased mode means the amplitude equals x0.
    CHECK(std::abs(model.amps(0) - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("exact_dmd on constant columns finds eigenvalue one") {
    const Eigen::VectorXd c = random_matrix(5, 1, 7);
    const Eigen::MatrixXd data = c.replicate(1, 8);
    const DmdModel model = exact_dmd(data, grid_of(8), 1);
    REQUIRE(model.rank == 1);
    CHECK(std::abs(model.eigvals(0) - std::complex<double>(1.0, 0.0)) < 1e-12);
    const Reconstruction rec = reconstruct(model, 0, 8);
    CHECK(frob_error(data, rec.values) <= 1e-12);
}

TEST_CASE("exact_dmd eigenvalues sort by decreasing modulus") {
    const Eigen::MatrixXd data = random_matrix(10, 30, 8);
    const DmdModel model = exact_dmd(data, grid_of(30), 6);
    for (Eigen::Index i = 1; i < model.eigvals.size(); ++i) {
        CHECK(std::abs(model.eigvals(i - 1)) >= std::abs(model.eigvals(i)) - 1e-14);
    }
}

TEST_CASE("exact_dmd validates window and rank") {
    const Eigen::MatrixXd data = random_matrix(4, 6, 9);
    CHECK_THROWS_AS(exact_dmd(data.leftCols(1), grid_of(1), 1), DimensionError);
    CHECK_THROWS_AS(exact_dmd(data, grid_of(6), 0), DimensionError);
    CHECK_THROWS_AS(exact_dmd(data, grid_of(6), 5), DimensionError);
}

TEST_CASE("dmd modes satisfy the lifted eigenvector relation") {
    // (S_R V Sigma^-1 Psi^T) Phi = Phi Lambda once the orbit saturates its
    // invariant subspace. Rotation blocks keep the orbit well conditioned.
    const int n = 12;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; i += 2) {
        const double angle = 0.15 + 0.07 * i;
        a(i, i) = 0.99 * std::cos(angle);
        a(i, i + 1) = -0.99 * std::sin(angle);
        a(i + 1, i) = 0.99 * std::sin(angle);
        a(i + 1, i + 1) = 0.99 * std::cos(angle);
    }
    const Eigen::MatrixXd data = linear_orbit(a, random_matrix(n, 1, 11), 41);
    const DmdModel model = exact_dmd(data, grid_of(41), n);

    const SplitPair p = split_lr(data);
    const TruncatedSvd svd = truncated_svd(p.left, n);
    Eigen::MatrixXd lift = p.right * svd.modes_right;
    lift.array().rowwise() /= svd.singular.transpose().array();
    const Eigen::MatrixXd op = lift * svd.modes_left.transpose();

    const Eigen::MatrixXcd lhs = op.cast<std::complex<double>>() * model.modes;
    const Eigen::MatrixXcd rhs = model.modes * model.eigvals.asDiagonal();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("exact_dmd at full rank recovers the excited spectrum") {
    SplitMix64 rng(123);
    for (const int n : {5, 12, 20}) {
        // Random matrices have well-scattered complex spectra; rescale the
        // spectral radius below one so the orbit stays bounded.
        Eigen::MatrixXd a = random_matrix(n, n, rng.next_u64());
        const Eigen::VectorXcd true_eigs_raw = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues();
        a *= 0.9 / true_eigs_raw.cwiseAbs().maxCoeff();
        const Eigen::VectorXcd true_eigs =
            Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues();

        const Eigen::VectorXd x0 = random_matrix(n, 1, rng.next_u64());
        const Eigen::MatrixXd data = linear_orbit(a, x0, 101);

        const DmdModel model = exact_dmd(data, grid_of(101), n);
        const Reconstruction rec = reconstruct(model, 0, 101);
        CHECK(frob_error(data, rec.values) <= 1e-8);
        for (int i = 0; i < n; ++i) {
            CHECK(contains_eigenvalue(model.eigvals, true_eigs(i), 1e-8));
        }
    }
}

TEST_CASE("reconstruct of a fixed-point model is constant") {
    const Eigen::VectorXd x0 = random_matrix(6, 1, 13);
    DmdModel model;
    model.modes = (x0 / x0.norm()).cast<std::complex<double>>();
    model.eigvals = Eigen::VectorXcd::Ones(1);
    model.amps = Eigen::VectorXcd::Constant(1, x0.norm());
    model.rank = 1;
    model.grid = grid_of(9);
    const Reconstruction rec = reconstruct(model, 0, 9);
    for (int k = 0; k < 9; ++k) {
        CHECK((rec.values.col(k) - x0).norm() <= 1e-14 * x0.norm());
    }
}

TEST_CASE("reconstruct range checking and overflow") {
    DmdModel model;
    model.modes = Eigen::MatrixXcd::Ones(1, 1);
    model.eigvals = Eigen::VectorXcd::Constant(1, std::complex<double>(10.0, 0.0));
    model.amps = Eigen::VectorXcd::Ones(1);
    model.rank = 1;
    model.grid = grid_of(400);
    CHECK_THROWS_AS(reconstruct(model, 0, 401), DimensionError);
    CHECK_THROWS_AS(reconstruct(model, 0, 400), OverflowError); // 10^399 overflows
    CHECK_NOTHROW(reconstruct(model, 0, 300));
}

TEST_CASE("frob_error basics") {
    const Eigen::MatrixXd s = random_matrix(4, 4, 14);
    CHECK(frob_error(s, s) == 0.0);
    CHECK(frob_error(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2)) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(frob_error(s, Eigen::MatrixXd::Zero(4, 5)), DimensionError);
    CHECK_THROWS_AS(frob_error(Eigen::MatrixXd::Zero(3, 3), s.topLeftCorner(3, 3)),
                    DegenerateInputError);
}

TEST_CASE("frob_error is scale invariant") {
    const Eigen::MatrixXd s = random_matrix(6, 9, 15);
    const Eigen::MatrixXd t = random_matrix(6, 9, 16);
    const double base = frob_error(s, t);
    for (const double c : {3.0, -0.125, 1e8}) {
        CHECK(frob_error(c * s, c * t) == doctest::Approx(base).epsilon(1e-13));
    }
}

TEST_CASE("model serialization round trips") {
    const Eigen::MatrixXd a = 0.8 * random_matrix(7, 7, 17) / std::sqrt(7.0);
    const Eigen::MatrixXd data = linear_orbit(a, random_matrix(7, 1, 18), 25);
    const DmdModel model = exact_dmd(data, TimeGrid{0.5, 0.25, 25}, 5, 1e-12);

    const auto dir = std::filesystem::temp_directory_path() / "pdmd_model_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / "model.json";
    save_dmd_model(model, path, 3);
    const DmdModel loaded = load_dmd_model(path);

    CHECK(loaded.rank == model.rank);
    CHECK(loaded.fit_residual == model.fit_residual);
    CHECK(loaded.grid.t0 == model.grid.t0);
    CHECK(loaded.grid.count == model.grid.count);
    CHECK(loaded.eigvals == model.eigvals);
    CHECK(loaded.amps == model.amps);
    CHECK(loaded.modes == model.modes);
}
