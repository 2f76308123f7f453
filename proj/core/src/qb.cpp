#include "pdmd/qb.hpp"

#include <Eigen/QR>

#include <algorithm>

#include "pdmd/rng.hpp"

namespace pdmd {

namespace {

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::Index k = std::min(m.rows(), m.cols());
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), k);
}

} // namespace

QbFactor qb_decompose(const Eigen::Ref<const Eigen::MatrixXd>& s, const QbConfig& config) {
    if (s.cols() < 1 || s.rows() < 1) {
        throw DimensionError("qb_decompose: empty input");
    }
    const Eigen::Index max_rank = std::min(s.rows(), s.cols());
    if (config.target_rank < 1 || config.target_rank > max_rank) {
        throw DimensionError("qb_decompose: target rank " + std::to_string(config.target_rank) +
                             " outside [1, " + std::to_string(max_rank) + "]");
    }
    if (config.oversample < 0 || config.power_iters < 0) {
        throw DimensionError("qb_decompose: oversample and power_iters must be nonnegative");
    }
    if (s.norm() == 0.0) {
        throw DegenerateInputError("qb_decompose: zero matrix has no range basis");
    }

    const Eigen::Index r = config.target_rank;
    const Eigen::Index sketch = std::min<Eigen::Index>(r + config.oversample, s.cols());

    // Test matrix filled in column-major storage order from the seed stream.
    Eigen::MatrixXd omega(s.cols(), sketch);
    SplitMix64 rng(config.seed);
    for (Eigen::Index i = 0; i < omega.size(); ++i) {
        omega.data()[i] = rng.next_gaussian();
    }

    Eigen::MatrixXd y = s * omega;
    for (int it = 0; it < config.power_iters; ++it) {
        const Eigen::MatrixXd q = thin_q(y);
        const Eigen::MatrixXd z = thin_q(s.transpose() * q);
        y = s * z;
    }

    QbFactor out;
    out.q_basis = thin_q(y).leftCols(r);
    out.small = out.q_basis.transpose() * s;
    out.config = config;
    return out;
}

DmdModel randomized_dmd(const Eigen::Ref<const Eigen::MatrixXd>& window, TimeGrid grid,
                        int rank, QbConfig config, double sv_floor) {
    if (window.cols() < 2) {
        throw DimensionError("randomized_dmd: need at least two columns");
    }
    const Eigen::Index max_rank = std::min(window.rows(), window.cols() - 1);
    if (rank < 1 || rank > max_rank) {
        throw DimensionError("randomized_dmd: rank " + std::to_string(rank) + " outside [1, " +
                             std::to_string(max_rank) + "]");
    }
    config.target_rank = rank;
    const QbFactor qb = qb_decompose(window, config);

    const SplitPair pair = split_lr(qb.small);
    const ColumnWindow here{0, static_cast<std::size_t>(window.cols())};
    detail::SpectralFit fit = detail::fit_spectral(pair.left, pair.right, rank, sv_floor, here);

    // Lift through the range basis; real and imaginary parts separately to
    // keep the products in real arithmetic.
    Eigen::MatrixXcd lifted(window.rows(), fit.modes.cols());
    lifted.real() = qb.q_basis * fit.modes.real();
    lifted.imag() = qb.q_basis * fit.modes.imag();

    return detail::finish_model(std::move(lifted), std::move(fit.eigvals), window.col(0), grid,
                                here);
}

DmdModel randomized_dmd(const SnapshotMatrix& s, ColumnWindow w, int rank, QbConfig config,
                        double sv_floor) {
    try {
        return randomized_dmd(s.columns(w), s.window_grid(w), rank, config, sv_floor);
    } catch (const SpectralError& e) {
        throw SpectralError(e.what(), w.start + e.window_start, w.len);
    }
}

} // namespace pdmd
