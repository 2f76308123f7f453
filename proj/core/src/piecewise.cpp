#include "pdmd/piecewise.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "pdmd/rng.hpp"

namespace pdmd {

const char* to_string(PdmdStatus s) {
    switch (s) {
    case PdmdStatus::converged: return "converged";
    case PdmdStatus::gates_passed: return "gates_passed";
    case PdmdStatus::gate_failed: return "gate_failed";
    case PdmdStatus::partition_too_fine: return "partition_too_fine";
    }
    return "unknown";
}

void PdmdConfig::validate() const {
    if (!(tol_bar > 0.0) || !(tol > 0.0)) {
        throw ParameterError("PdmdConfig: tolerances must be positive");
    }
    if (n_init < 1 || dn < 1) {
        throw ParameterError("PdmdConfig: n_init and dn must be at least 1");
    }
    if (nu_star < 2) {
        throw ParameterError("PdmdConfig: nu_star must be at least 2");
    }
    if (rank_cap < 1) {
        throw ParameterError("PdmdConfig: rank_cap must be at least 1");
    }
    if (sv_floor < 0.0) {
        throw ParameterError("PdmdConfig: sv_floor must be nonnegative");
    }
}

double err_inf_window(const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const Eigen::Ref<const Eigen::MatrixXd>& recon) {
    if (data.rows() != recon.rows() || data.cols() != recon.cols()) {
        throw DimensionError("err_inf_window: shape mismatch");
    }
    double worst = 0.0;
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
        const double num = (data.col(k) - recon.col(k)).lpNorm<Eigen::Infinity>();
        const double den = data.col(k).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, den > 0.0 ? num / den : num);
    }
    return worst;
}

Eigen::VectorXd eps_time(const Eigen::Ref<const Eigen::MatrixXd>& data,
                         const Eigen::Ref<const Eigen::MatrixXd>& recon) {
    if (data.rows() != recon.rows() || data.cols() != recon.cols()) {
        throw DimensionError("eps_time: shape mismatch");
    }
    Eigen::VectorXd out(data.cols());
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
        const double num = (data.col(k) - recon.col(k)).norm();
        const double den = data.col(k).norm();
        out(k) = den > 0.0 ? num / den : num;
    }
    return out;
}

int max_rank(const PdmdResult& result) {
    if (result.ranks.empty()) {
        throw DimensionError("max_rank: result has no fitted subsets");
    }
    return *std::max_element(result.ranks.begin(), result.ranks.end());
}

namespace {

int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return 0;
    }
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) {
            ++rank;
        }
    }
    return rank;
}

} // namespace

PdmdResult pdmd_pass(const SnapshotMatrix& s, std::size_t n_parts, const PdmdConfig& config,
                     Eigen::MatrixXd* keep_recon) {
    config.validate();
    PdmdResult result;
    result.n_parts = n_parts;
    try {
        result.windows = partition(s, n_parts, config.nu_star);
    } catch (const PartitionTooFine&) {
        result.status = PdmdStatus::partition_too_fine;
        return result;
    }

    Eigen::MatrixXd recon(s.data().rows(), s.data().cols());
    result.models.reserve(n_parts);
    result.ranks.reserve(n_parts);
    result.err_inf.reserve(n_parts);

    for (std::size_t i = 0; i < result.windows.size(); ++i) {
        const ColumnWindow w = result.windows[i];
        int target = static_cast<int>(std::min({w.len - 1, static_cast<std::size_t>(config.rank_cap),
                                                s.rows()}));
        if (config.rank_rule == PdmdConfig::RankRule::exact_rank) {
            const int measured = numerical_rank(s.columns(w));
            target = std::clamp(measured, 1, target);
        }

        QbConfig qb = config.qb;
        qb.seed = derive_seed(config.qb.seed, n_parts, i);
        DmdModel model = randomized_dmd(s, w, target, qb, config.sv_floor);
        const Reconstruction rec = reconstruct(model, 0, w.len);
        const double err = err_inf_window(s.columns(w), rec.values);

        recon.middleCols(static_cast<Eigen::Index>(w.start), static_cast<Eigen::Index>(w.len)) =
            rec.values;
        result.models.push_back(std::move(model));
        result.ranks.push_back(result.models.back().rank);
        result.err_inf.push_back(err);

        if (err > config.tol_bar) {
            result.status = PdmdStatus::gate_failed;
            result.failed_subset = i;
            return result;
        }
    }

    result.ep = frob_error(s.data(), recon);
    result.eps_time = eps_time(s.data(), recon);
    result.status = (result.ep <= config.tol) ? PdmdStatus::converged : PdmdStatus::gates_passed;
    if (keep_recon != nullptr) {
        *keep_recon = std::move(recon);
    }
    return result;
}

PdmdOutcome pdmd_converge(const SnapshotMatrix& s, const PdmdConfig& config,
                          Eigen::MatrixXd* keep_recon) {
    config.validate();
    PdmdOutcome outcome;
    std::size_t n = config.n_init;
    double best_ep = std::numeric_limits<double>::infinity();
    std::size_t best_n = 0;

    for (;;) {
        PdmdResult pass = pdmd_pass(s, n, config, keep_recon);
        TraceRow row;
        row.n_parts = n;
        row.status = pass.status;
        row.ep = pass.ep;
        row.max_rank = pass.ranks.empty() ? 0 : max_rank(pass);
        row.failed_subset = pass.failed_subset;
        outcome.trace.push_back(row);

        switch (pass.status) {
        case PdmdStatus::converged:
            outcome.converged = true;
            outcome.result = std::move(pass);
            return outcome;
        case PdmdStatus::partition_too_fine:
            if (best_n > 0) {
                // Replay the best pass; derived seeds make it bit-identical.
                outcome.result = pdmd_pass(s, best_n, config, keep_recon);
            } else {
                if (keep_recon != nullptr) {
                    keep_recon->resize(0, 0);
                }
                outcome.result = std::move(pass);
            }
            return outcome;
        case PdmdStatus::gates_passed:
            if (pass.ep < best_ep) {
                best_ep = pass.ep;
                best_n = n;
            }
            break;
        case PdmdStatus::gate_failed:
            break;
        }
        n += config.dn;
    }
}

} // namespace pdmd
