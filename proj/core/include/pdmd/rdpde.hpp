#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <variant>

#include "pdmd/snapshots.hpp"

namespace pdmd {

// -- kinetics -----------------------------------------------------------------

/// Activator-inhibitor kinetics with cubic activation; the reaction terms are
/// scaled by 1/d_u so the excitable regime matches the usual parameterization.
struct FhnKinetics {
    double d_u = 0.015;
    double b = 0.5;
    double gamma = 2.0;
    double c = 0.05;
};

/// lambda-omega oscillator: lambda = 1 - (u^2+v^2), omega = -beta (u^2+v^2).
struct LambdaOmegaKinetics {
    double rho = 10.0;
    double beta = 1.0;
};

/// Morphochemical electrodeposition kinetics. `d` must satisfy the closed
/// form derive_dib_d(c, alpha, gamma), which places the homogeneous
/// equilibrium at (u, v) = (0, alpha).
struct DibKinetics {
    double a1 = 10.0;
    double a2 = 1.0;
    double alpha = 0.5;
    double b = 66.0;
    double c = 3.0;
    double gamma = 0.2;
    double k2 = 2.5;
    double k3 = 1.5;
    double rho = 25.0 / 4.0;
    double d = 0.0;
};

using Kinetics = std::variant<FhnKinetics, LambdaOmegaKinetics, DibKinetics>;

/// Pointwise reaction terms (f, g).
std::pair<double, double> kinetics_eval(const Kinetics& k, double u, double v);

/// d = C(1-alpha)(1-gamma+gamma*alpha) / (alpha(1+gamma*alpha)).
double derive_dib_d(double c, double alpha, double gamma);

// -- problem description ------------------------------------------------------

enum class BoundaryKind {
    neumann_zero,
    /// 1D only: time-dependent flux u_x(0,t) = -(5e4 t^3 e^(-15t)) on the left
    /// boundary of u, zero flux elsewhere and for v.
    fhn_left_flux,
};

double fhn_left_flux(double t);

struct InitialData {
    enum class Kind { zero, lambda_omega_ramp, perturbed_equilibrium } kind = Kind::zero;
    double u_base = 0.0;
    double v_base = 0.0;
    double amplitude = 0.0;  // uniform(0,1) perturbation scale
    std::uint64_t seed = 0;
};

/// Full-order model description. The spatial grid has nx (x ny) equispaced
/// nodes spanning the closed domain, so the spacing is lx/(nx-1); snapshots
/// are stored every kappa integrator steps starting from the initial state.
struct RdpdeProblem {
    std::string name = "custom";
    Kinetics kinetics;
    int dim = 1;
    double lx = 1.0;
    double ly = 0.0;
    int nx = 0;
    int ny = 1;
    double d_u = 0.0;
    double d_v = 0.0;
    BoundaryKind bc = BoundaryKind::neumann_zero;
    InitialData ic;
    double h_t = 1e-3;
    double t_final = 1.0;
    int kappa = 1;

    double hx() const { return lx / (nx - 1); }
    double hy() const { return ly / (ny - 1); }
    std::size_t steps_total() const;
    /// Number of stored snapshots m+1 = steps_total()/kappa (initial state
    /// is column 0, so integration stops kappa steps short of t_final).
    std::size_t stored_count() const;
    void validate() const;
};

// -- discrete operators -------------------------------------------------------

/// Dense 3-point Laplacian with second-order homogeneous Neumann closure on
/// the vertex grid: boundary rows are [-2, 2]/h^2. Constants are in the null
/// space; the exactly conserved functional is the trapezoid-weighted sum.
Eigen::MatrixXd neumann_laplacian_1d(int n, double h);

/// Eigendecomposition L = basis * diag(eigenvalues) * inverse of the (non
/// symmetric) Neumann Laplacian, computed through its diagonal similarity to
/// a symmetric tridiagonal matrix. Eigenvalues ascend and are all <= 0.
struct NeumannEigenBasis {
    Eigen::MatrixXd basis;
    Eigen::MatrixXd inverse;
    Eigen::VectorXd eigenvalues;
};
NeumannEigenBasis neumann_eigenbasis(int n, double h);

/// Solves (I - coef*(Lx U + U Ly^T)) U = rhs by transforming into the
/// eigenbases, dividing by 1 - coef*(lambda_x_i + lambda_y_j) entrywise and
/// transforming back. coef >= 0 keeps every denominator >= 1.
class SylvesterStepper {
public:
    SylvesterStepper(const NeumannEigenBasis& x, const NeumannEigenBasis& y, double coef);
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    double coef() const { return coef_; }

private:
    Eigen::MatrixXd px_, pxi_, py_, pyi_;
    Eigen::ArrayXXd denom_;
    double coef_;
};

// -- simulators ---------------------------------------------------------------

/// IMEX Euler on the 1D problem: implicit diffusion for u via a prefactored
/// tridiagonal solve (flux boundary injected through the ghost-point term),
/// explicit pointwise update for v (d_v = 0). Returns the coupled dataset.
SnapshotMatrix imex_euler_1d(const RdpdeProblem& problem);

/// IMEX Euler on the 2D problem in matrix form; each implicit solve is one
/// SylvesterStepper application per field.
SnapshotMatrix imex_euler_2d(const RdpdeProblem& problem);

/// Dispatches on problem.dim.
SnapshotMatrix simulate(const RdpdeProblem& problem);

// -- presets ------------------------------------------------------------------

enum class PresetName { fhn, lambda_omega, dib_turing, dib_turing_hopf };
enum class PresetScale { paper, desk };

/// Ready-made problem configurations. `paper` runs the full-size grids and
/// horizons; `desk` shrinks the grid (and for some problems the step) while
/// keeping the dynamical regime. `seed` feeds the random initial
/// perturbations of the dib presets and is recorded in InitialData.
RdpdeProblem preset(PresetName name, PresetScale scale, std::uint64_t seed = 0);

const char* to_string(PresetName name);
const char* to_string(PresetScale scale);
PresetName parse_preset_name(const std::string& text);
PresetScale parse_preset_scale(const std::string& text);

} // namespace pdmd
