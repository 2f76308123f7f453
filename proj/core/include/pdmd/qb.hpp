#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "pdmd/dmd.hpp"
#include "pdmd/snapshots.hpp"

namespace pdmd {

/// Sketching parameters for the randomized range factorization. The test
/// matrix is drawn from the SplitMix64 stream of `seed` (see rng.hpp), so a
/// fixed seed reproduces Q and B bit for bit.
struct QbConfig {
    int target_rank = 1;
    int oversample = 10;
    int power_iters = 2;
    std::uint64_t seed = 0;
};

/// Randomized range factorization S ~ q_basis * small with q_basis
/// orthonormal (n x r) and small = q_basis^T S (r x (m+1)).
struct QbFactor {
    Eigen::MatrixXd q_basis;
    Eigen::MatrixXd small;
    QbConfig config;
};

/// Gaussian-sketch QB factorization: Y = S*Omega with Omega of r+oversample
/// i.i.d. N(0,1) columns (clamped to the column count), `power_iters` rounds
/// of subspace refinement {Q = qr(Y); Z = qr(S^T Q); Y = S Z}, final thin QR
/// truncated to target_rank columns. Throws DegenerateInputError on a zero
/// matrix.
QbFactor qb_decompose(const Eigen::Ref<const Eigen::MatrixXd>& s, const QbConfig& config);

/// DMD fitted in the randomized range: QB-project the window, run the
/// SVD-projected spectral fit on the small factor, lift modes back through
/// q_basis. Amplitudes are solved against the original (unprojected) first
/// snapshot. The returned model is interchangeable with exact_dmd's.
DmdModel randomized_dmd(const Eigen::Ref<const Eigen::MatrixXd>& window, TimeGrid grid,
                        int rank, QbConfig config, double sv_floor = 0.0);
DmdModel randomized_dmd(const SnapshotMatrix& s, ColumnWindow w, int rank, QbConfig config,
                        double sv_floor = 0.0);

} // namespace pdmd
