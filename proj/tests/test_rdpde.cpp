#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

#include "pdmd/rdpde.hpp"

using namespace pdmd;

namespace {

/// Trapezoid-weighted spatial sum, the exactly conserved functional of the
/// vertex-grid Neumann Laplacian.
double trapezoid_sum_1d(const Eigen::Ref<const Eigen::VectorXd>& field) {
    double s = 0.5 * (field(0) + field(field.size() - 1));
    for (Eigen::Index i = 1; i + 1 < field.size(); ++i) {
        s += field(i);
    }
    return s;
}

double trapezoid_sum_2d(const Eigen::Ref<const Eigen::VectorXd>& field, int nx, int ny) {
    const Eigen::Map<const Eigen::MatrixXd> m(field.data(), nx, ny);
    double s = 0.0;
    for (int j = 0; j < ny; ++j) {
        const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
        s += wy * trapezoid_sum_1d(m.col(j));
    }
    return s;
}

RdpdeProblem zero_kinetics_1d(int n, std::uint64_t seed) {
    RdpdeProblem p;
    p.kinetics = LambdaOmegaKinetics{0.0, 0.0};
    p.dim = 1;
    p.lx = 1.0;
    p.nx = n;
    p.d_u = 0.05;
    p.d_v = 0.0;
    p.ic = InitialData{InitialData::Kind::perturbed_equilibrium, 0.3, 0.8, 1.0, seed};
    p.h_t = 1e-3;
    p.t_final = 0.05;
    p.kappa = 1;
    return p;
}

RdpdeProblem zero_kinetics_2d(int n, std::uint64_t seed) {
    RdpdeProblem p = zero_kinetics_1d(n, seed);
    p.dim = 2;
    p.ly = 1.0;
    p.ny = n;
    p.d_v = 0.02;
    return p;
}

} // namespace

TEST_CASE("dib kinetics vanish at the homogeneous equilibrium") {
    for (const PresetName name : {PresetName::dib_turing, PresetName::dib_turing_hopf}) {
        const RdpdeProblem p = preset(name, PresetScale::desk, 0);
        const auto& k = std::get<DibKinetics>(p.kinetics);
        const auto [f, g] = kinetics_eval(p.kinetics, 0.0, k.alpha);
        CHECK(std::abs(f) <= 1e-13);
        CHECK(std::abs(g) <= 1e-13);
    }
}

TEST_CASE("lambda-omega kinetics at a hand-computed point") {
    const Kinetics k = LambdaOmegaKinetics{10.0, 1.0};
    const auto [f, g] = kinetics_eval(k, 1.0, 0.0);
    // s = 1: lambda = 0, omega = -1, f = 10*(0*1 - (-1)*0) = 0, g = 10*(-1).
    CHECK(f == doctest::Approx(0.0));
    CHECK(g == doctest::Approx(-10.0));
}

TEST_CASE("fhn kinetics at the origin") {
    const Kinetics k = FhnKinetics{};
    const auto [f, g] = kinetics_eval(k, 0.0, 0.0);
    CHECK(f == doctest::Approx(10.0 / 3.0));
    CHECK(g == doctest::Approx(0.05));
}

TEST_CASE("derive_dib_d closed form") {
    CHECK(derive_dib_d(3.0, 0.5, 0.2) == doctest::Approx(1.35 / 0.55).epsilon(1e-14));
    CHECK(derive_dib_d(2.794, 0.5, 0.2) == doctest::Approx(2.794 * 0.9 / 1.1).epsilon(1e-14));
    // gamma = 0 degenerates to C(1-alpha)/alpha.
    CHECK(derive_dib_d(2.0, 0.25, 0.0) == doctest::Approx(2.0 * 0.75 / 0.25));
    CHECK_THROWS_AS(derive_dib_d(1.0, 1.5, 0.2), ParameterError);
}

TEST_CASE("neumann laplacian stencil and null space") {
    const Eigen::MatrixXd l = neumann_laplacian_1d(3, 1.0);
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(1, 1) == doctest::Approx(-2.0));
    CHECK(l(1, 2) == doctest::Approx(1.0));
    CHECK(l(0, 0) == doctest::Approx(-2.0));
    CHECK(l(0, 1) == doctest::Approx(2.0));
    const Eigen::MatrixXd big = neumann_laplacian_1d(17, 0.25);
    CHECK((big * Eigen::VectorXd::Ones(17)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("neumann laplacian spectrum matches the closed form") {
    const int n = 50;
    const double h = 0.1;
    const NeumannEigenBasis eig = neumann_eigenbasis(n, h);
    // Eigenvalues of the vertex-grid operator: -(2/h^2)(1 - cos(j pi/(n-1))).
    constexpr double pi = 3.14159265358979323846;
    Eigen::VectorXd expected(n);
    for (int j = 0; j < n; ++j) {
        expected(j) = -(2.0 / (h * h)) * (1.0 - std::cos(j * pi / (n - 1)));
    }
    std::sort(expected.data(), expected.data() + n);
    for (int j = 0; j < n; ++j) {
        CHECK(eig.eigenvalues(j) == doctest::Approx(expected(j)).epsilon(1e-10));
        CHECK(eig.eigenvalues(j) <= 1e-12);
    }
    // basis * diag * inverse reassembles the operator.
    const Eigen::MatrixXd l = neumann_laplacian_1d(n, h);
    const Eigen::MatrixXd rebuilt =
        eig.basis * eig.eigenvalues.asDiagonal() * eig.inverse;
    CHECK((l - rebuilt).cwiseAbs().maxCoeff() <= 1e-8 / (h * h));
}

TEST_CASE("sylvester step agrees with the dense kronecker solve") {
    const int nx = 12, ny = 12;
    const double hx = 0.2, hy = 0.15, coef = 3e-3;
    const NeumannEigenBasis ex = neumann_eigenbasis(nx, hx);
    const NeumannEigenBasis ey = neumann_eigenbasis(ny, hy);
    const SylvesterStepper stepper(ex, ey, coef);

    Eigen::MatrixXd rhs(nx, ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            rhs(i, j) = std::sin(0.3 * i) + std::cos(0.2 * j) + 0.01 * i * j;
        }
    }
    const Eigen::MatrixXd u = stepper.solve(rhs);

    const Eigen::MatrixXd lx = neumann_laplacian_1d(nx, hx);
    const Eigen::MatrixXd ly = neumann_laplacian_1d(ny, hy);
    const Eigen::MatrixXd ix = Eigen::MatrixXd::Identity(nx, nx);
    const Eigen::MatrixXd iy = Eigen::MatrixXd::Identity(ny, ny);
    // vec is column-major: vec(Lx U) = (I (x) Lx) vec(U),
    // vec(U Ly^T) = (Ly (x) I) vec(U).
    Eigen::MatrixXd big = Eigen::MatrixXd::Identity(nx * ny, nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < ny; ++i) {
            big.block(j * nx, i * nx, nx, nx) -= coef * ly(j, i) * ix;
        }
        big.block(j * nx, j * nx, nx, nx) -= coef * lx;
    }
    const Eigen::Map<const Eigen::VectorXd> rhs_vec(rhs.data(), nx * ny);
    const Eigen::VectorXd u_dense = big.fullPivLu().solve(rhs_vec);
    const Eigen::Map<const Eigen::VectorXd> u_vec(u.data(), nx * ny);
    CHECK((u_vec - u_dense).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("zero kinetics with constant data stays constant") {
    SUBCASE("1d") {
        RdpdeProblem p = zero_kinetics_1d(41, 0);
        p.ic.amplitude = 0.0;
        const SnapshotMatrix s = imex_euler_1d(p);
        for (std::size_t k = 0; k < s.cols(); ++k) {
            CHECK((s.data().col(k).head(41).array() - 0.3).abs().maxCoeff() <= 1e-12);
            CHECK((s.data().col(k).tail(41).array() - 0.8).abs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("2d") {
        RdpdeProblem p = zero_kinetics_2d(17, 0);
        p.ic.amplitude = 0.0;
        const SnapshotMatrix s = imex_euler_2d(p);
        CHECK((s.data().topRows(17 * 17).array() - 0.3).abs().maxCoeff() <= 1e-12);
        CHECK((s.data().bottomRows(17 * 17).array() - 0.8).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("diffusion conserves the trapezoid mean under zero kinetics") {
    SUBCASE("1d") {
        const SnapshotMatrix s = imex_euler_1d(zero_kinetics_1d(41, 4));
        const double ref = trapezoid_sum_1d(s.data().col(0).head(41));
        for (std::size_t k = 1; k < s.cols(); ++k) {
            CHECK(trapezoid_sum_1d(s.data().col(k).head(41)) ==
                  doctest::Approx(ref).epsilon(1e-12));
        }
    }
    SUBCASE("2d") {
        const SnapshotMatrix s = imex_euler_2d(zero_kinetics_2d(17, 5));
        const int n = 17 * 17;
        const double ref_u = trapezoid_sum_2d(s.data().col(0).head(n), 17, 17);
        const double ref_v = trapezoid_sum_2d(s.data().col(0).tail(n), 17, 17);
        for (std::size_t k = 1; k < s.cols(); ++k) {
            CHECK(trapezoid_sum_2d(s.data().col(k).head(n), 17, 17) ==
                  doctest::Approx(ref_u).epsilon(1e-12));
            CHECK(trapezoid_sum_2d(s.data().col(k).tail(n), 17, 17) ==
                  doctest::Approx(ref_v).epsilon(1e-12));
        }
    }
}

TEST_CASE("unperturbed dib presets stay on the equilibrium") {
    // The equilibrium residual of the discretized kinetics is one ulp, and the
    // instability that makes these problems interesting amplifies it at a rate
    // proportional to rho, so the horizon is kept short enough that the
    // amplified roundoff stays below the bound.
    for (const PresetName name : {PresetName::dib_turing, PresetName::dib_turing_hopf}) {
        RdpdeProblem p = preset(name, PresetScale::desk, 0);
        p.ic.amplitude = 0.0;
        p.t_final = (name == PresetName::dib_turing) ? 0.5 : 0.1;
        const auto& k = std::get<DibKinetics>(p.kinetics);
        const SnapshotMatrix s = imex_euler_2d(p);
        const Eigen::Index n = s.data().rows() / 2;
        CHECK(s.data().topRows(n).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((s.data().bottomRows(n).array() - k.alpha).abs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("dib initial perturbations are deterministic in the seed") {
    RdpdeProblem p = preset(PresetName::dib_turing, PresetScale::desk, 42);
    p.t_final = 0.05;
    const SnapshotMatrix a = imex_euler_2d(p);
    const SnapshotMatrix b = imex_euler_2d(p);
    CHECK(std::memcmp(a.data().data(), b.data().data(),
                      sizeof(double) * static_cast<std::size_t>(a.data().size())) == 0);
    RdpdeProblem q = preset(PresetName::dib_turing, PresetScale::desk, 43);
    q.t_final = 0.05;
    const SnapshotMatrix c = imex_euler_2d(q);
    CHECK((a.data() - c.data()).norm() > 0.0);
}

TEST_CASE("preset shapes match their stated datasets") {
    const RdpdeProblem fhn = preset(PresetName::fhn, PresetScale::paper, 0);
    CHECK(fhn.nx == 1024);
    CHECK(fhn.stored_count() == 6000);

    const RdpdeProblem lo = preset(PresetName::lambda_omega, PresetScale::paper, 0);
    CHECK(lo.nx * lo.ny == 9801);
    CHECK(lo.stored_count() == 12500);

    const RdpdeProblem dib = preset(PresetName::dib_turing, PresetScale::paper, 0);
    CHECK(2 * dib.nx * dib.ny == 20000);
    CHECK(dib.stored_count() == 10000);

    const RdpdeProblem hopf = preset(PresetName::dib_turing_hopf, PresetScale::paper, 0);
    CHECK(hopf.stored_count() == 11250);
    const auto& k = std::get<DibKinetics>(hopf.kinetics);
    CHECK(k.d == doctest::Approx(2.794 * 0.9 / 1.1).epsilon(1e-14));
}

TEST_CASE("fhn desk run keeps the relaxation oscillations") {
    const SnapshotMatrix s = imex_euler_1d(preset(PresetName::fhn, PresetScale::desk, 0));
    REQUIRE(s.rows() == 512);
    REQUIRE(s.cols() == 6000);
    const Eigen::VectorXd mean_u = spatial_mean_series(s, Field::u);
    const double lo = mean_u.minCoeff();
    const double hi = mean_u.maxCoeff();
    CHECK(hi - lo > 0.5); // relaxation swings are order one
    const double mid = 0.5 * (lo + hi);
    int upward = 0;
    for (Eigen::Index k = 1; k < mean_u.size(); ++k) {
        if (mean_u(k - 1) <= mid && mean_u(k) > mid) {
            ++upward;
        }
    }
    CHECK(upward >= 3);
}

TEST_CASE("imex euler is first order in time") {
    // Self-convergence on a short horizon: halving h_t should roughly halve
    // the error against the next-finer run.
    RdpdeProblem base = preset(PresetName::dib_turing, PresetScale::desk, 9);
    base.nx = base.ny = 24;
    base.kappa = 1;
    const double h0 = base.h_t;
    base.t_final = 200.0 * h0;

    auto state_at = [](const SnapshotMatrix& s, std::size_t step) {
        return Eigen::VectorXd(s.data().col(step - 1));
    };

    RdpdeProblem half = base;
    half.h_t = h0 / 2.0;
    RdpdeProblem quarter = base;
    quarter.h_t = h0 / 4.0;

    const SnapshotMatrix s0 = imex_euler_2d(base);
    const SnapshotMatrix s1 = imex_euler_2d(half);
    const SnapshotMatrix s2 = imex_euler_2d(quarter);

    const Eigen::VectorXd x0 = state_at(s0, 180);
    const Eigen::VectorXd x1 = state_at(s1, 360);
    const Eigen::VectorXd x2 = state_at(s2, 720);
    const double e0 = (x0 - x1).norm();
    const double e1 = (x1 - x2).norm();
    CHECK(e0 / e1 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("time stepping flags blow-ups with the step index") {
    RdpdeProblem p;
    p.kinetics = LambdaOmegaKinetics{1e6, 1.0};
    p.dim = 1;
    p.lx = 1.0;
    p.nx = 16;
    p.d_u = 0.0;
    p.d_v = 0.0;
    p.ic = InitialData{InitialData::Kind::perturbed_equilibrium, 2.0, 2.0, 0.0, 0};
    p.h_t = 1.0;
    p.t_final = 20.0;
    p.kappa = 1;
    CHECK_THROWS_AS(imex_euler_1d(p), BlowUpError);
}

TEST_CASE("problem validation rejects inconsistent setups") {
    RdpdeProblem p = preset(PresetName::fhn, PresetScale::desk, 0);
    p.dim = 2;
    CHECK_THROWS_AS(p.validate(), ParameterError); // flux BC is 1D only
    RdpdeProblem q = preset(PresetName::dib_turing, PresetScale::desk, 0);
    q.kappa = 0;
    CHECK_THROWS_AS(q.validate(), ParameterError);
    RdpdeProblem r = preset(PresetName::dib_turing, PresetScale::desk, 0);
    r.nx = 2;
    CHECK_THROWS_AS(r.validate(), ParameterError);
}

TEST_CASE("preset name parsing") {
    CHECK(parse_preset_name("fhn") == PresetName::fhn);
    CHECK(parse_preset_name("dib_turing_hopf") == PresetName::dib_turing_hopf);
    CHECK_THROWS_AS(parse_preset_name("nope"), ParameterError);
    CHECK(parse_preset_scale("desk") == PresetScale::desk);
    CHECK_THROWS_AS(parse_preset_scale("tiny"), ParameterError);
}
