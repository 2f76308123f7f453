#pragma once

#include <Eigen/Dense>

#include <complex>
#include <filesystem>

#include "pdmd/snapshots.hpp"

namespace pdmd {

/// Time-shifted column pair: left holds x_0..x_{m-1}, right holds x_1..x_m.
struct SplitPair {
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
};

/// Rank-truncated SVD M ~ modes_left * diag(singular) * modes_right^T.
/// singular is nonincreasing; both factor matrices have orthonormal columns.
struct TruncatedSvd {
    Eigen::MatrixXd modes_left;
    Eigen::VectorXd singular;
    Eigen::MatrixXd modes_right;

    Eigen::Index rank() const { return singular.size(); }
};

/// Spectral surrogate of the one-step operator fitted to a snapshot window:
/// columns of `modes` are unit-norm mode vectors, `eigvals` the matching
/// one-step eigenvalues, `amps` the least-squares coefficients expressing the
/// window's first snapshot in the mode basis. The reconstruction at window
/// index k is Re(modes * diag(eigvals)^k * amps).
struct DmdModel {
    Eigen::MatrixXcd modes;
    Eigen::VectorXcd eigvals;
    Eigen::VectorXcd amps;
    int rank = 0;
    TimeGrid grid;
    double fit_residual = 0.0;
};

/// Real-part reconstruction plus the largest |imaginary| residual seen, as a
/// diagnostic for mispaired complex modes.
struct Reconstruction {
    Eigen::MatrixXd values;
    double max_imag = 0.0;
};

/// left = columns 0..m-1 of the window, right = columns 1..m.
SplitPair split_lr(const Eigen::Ref<const Eigen::MatrixXd>& window);

/// Best rank-r factorization by singular value ordering. If sv_floor > 0,
/// trailing values with sigma_i/sigma_1 < sv_floor are dropped and the
/// effective rank shrinks accordingly. Throws DegenerateInputError when all
/// singular values vanish.
TruncatedSvd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& m, int rank,
                           double sv_floor = 0.0);

/// SVD-projected DMD fit of the window: split, truncated SVD of the left
/// part, reduced operator, eigendecomposition, mode lift, amplitude solve.
/// sv_floor = 0 applies no conditioning guard, so severely rank-deficient
/// windows can produce the ill-conditioned fits they genuinely have.
DmdModel exact_dmd(const Eigen::Ref<const Eigen::MatrixXd>& window, TimeGrid grid,
                   int rank, double sv_floor = 0.0);
DmdModel exact_dmd(const SnapshotMatrix& s, ColumnWindow w, int rank,
                   double sv_floor = 0.0);

/// Reconstructs window indices [k_begin, k_begin + k_count). Eigenvalue
/// powers use the modulus-argument form, O(1) per (mode, k). Throws
/// OverflowError when |lambda|^k leaves the representable range.
Reconstruction reconstruct(const DmdModel& model, std::size_t k_begin, std::size_t k_count);

/// ||a - b||_F / ||a||_F. Throws on shape mismatch or ||a||_F = 0.
double frob_error(const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b);

/// JSON + companion-file model serialization. The JSON holds rank, eigvals
/// and amps as (re,im) pairs, the fit residual and source window; the modes
/// are written next to it as a PDMD1 file with Re and Im blocks stacked.
void save_dmd_model(const DmdModel& model, const std::filesystem::path& json_path,
                    std::size_t window_start = 0);
DmdModel load_dmd_model(const std::filesystem::path& json_path);

namespace detail {

/// Shared spectral core: fits the reduced operator on an already split pair
/// and returns the lifted (unnormalized) modes and eigenvalues, sorted by
/// decreasing modulus, then decreasing real and imaginary part. `window` is
/// only used to label SpectralError diagnostics.
struct SpectralFit {
    Eigen::MatrixXcd modes;
    Eigen::VectorXcd eigvals;
};
SpectralFit fit_spectral(const Eigen::Ref<const Eigen::MatrixXd>& left,
                         const Eigen::Ref<const Eigen::MatrixXd>& right, int rank,
                         double sv_floor, ColumnWindow window);

/// Normalizes mode columns, drops numerically zero ones, solves the
/// rank-revealing least squares for the amplitudes and assembles the model.
DmdModel finish_model(Eigen::MatrixXcd modes, Eigen::VectorXcd eigvals,
                      const Eigen::Ref<const Eigen::VectorXd>& x0, TimeGrid grid,
                      ColumnWindow window);

} // namespace detail

} // namespace pdmd
