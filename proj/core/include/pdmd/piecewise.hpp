#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

#include "pdmd/qb.hpp"
#include "pdmd/snapshots.hpp"

namespace pdmd {

enum class PdmdStatus {
    converged,          // all gates passed and ep <= tol
    gates_passed,       // all gates passed but ep > tol; refinement continues
    gate_failed,        // err_inf exceeded tol_bar on subset failed_subset
    partition_too_fine, // next partition would violate the minimum subset width
};

const char* to_string(PdmdStatus s);

/// Controls for the piecewise fit and its refinement loop.
struct PdmdConfig {
    double tol_bar = 1e-1; // per-subset worst-column gate
    double tol = 1e-6;     // global Frobenius stopping tolerance
    std::size_t n_init = 1;
    std::size_t dn = 1;       // partition increment after any non-converged pass
    std::size_t nu_star = 10; // minimum subset width
    int rank_cap = 200;
    QbConfig qb; // oversample/power_iters/base seed template; per-subset
                 // seeds are derive_seed(qb.seed, N, i)
    // Relative singular-value floor inside per-subset fits. The default keeps
    // the effective rank near the numerical rank of each subset; set 0 to fit
    // at the full target rank with no conditioning guard.
    double sv_floor = 1e-12;
    // Target rank per subset: width-1 capped at rank_cap, or the measured
    // numerical rank of the subset (slower; one extra SVD per subset).
    enum class RankRule { capped_width, exact_rank };
    RankRule rank_rule = RankRule::capped_width;

    void validate() const;
};

inline constexpr std::size_t no_subset = std::numeric_limits<std::size_t>::max();

/// One piecewise pass. On gate failure only the first failed_subset+1
/// subsets carry models/ranks/errors; ep and eps_time are only set for
/// successful passes.
struct PdmdResult {
    std::size_t n_parts = 0;
    std::vector<ColumnWindow> windows;
    std::vector<DmdModel> models;
    std::vector<int> ranks;
    std::vector<double> err_inf;
    double ep = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd eps_time;
    PdmdStatus status = PdmdStatus::gate_failed;
    std::size_t failed_subset = no_subset;
};

struct TraceRow {
    std::size_t n_parts = 0;
    PdmdStatus status = PdmdStatus::gate_failed;
    double ep = std::numeric_limits<double>::quiet_NaN();
    int max_rank = 0;
    std::size_t failed_subset = no_subset;
};

struct PdmdOutcome {
    bool converged = false;
    PdmdResult result; // converged pass, or best-ep pass when refinement hit
                       // the partition floor, or the last pass if none succeeded
    std::vector<TraceRow> trace;
};

/// Worst relative column error in the infinity norm; columns with zero data
/// norm contribute their absolute error.
double err_inf_window(const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const Eigen::Ref<const Eigen::MatrixXd>& recon);

/// Per-column relative error in the Euclidean norm, same zero-column guard.
Eigen::VectorXd eps_time(const Eigen::Ref<const Eigen::MatrixXd>& data,
                         const Eigen::Ref<const Eigen::MatrixXd>& recon);

/// Largest per-subset rank of a pass.
int max_rank(const PdmdResult& result);

/// Fits one N-way partition: randomized DMD per subset in order, stopping at
/// the first subset whose err_inf exceeds tol_bar. On success assembles the
/// concatenated reconstruction and the global indicators; pass keep_recon to
/// receive that reconstruction instead of discarding it.
PdmdResult pdmd_pass(const SnapshotMatrix& s, std::size_t n_parts, const PdmdConfig& config,
                     Eigen::MatrixXd* keep_recon = nullptr);

/// Refinement loop: repeats pdmd_pass from n_init, incrementing N by dn after
/// every non-converged pass, until ep <= tol or the partition floor is hit
/// (in which case the best pass seen is re-run and returned). The trace holds
/// one row per attempted N.
PdmdOutcome pdmd_converge(const SnapshotMatrix& s, const PdmdConfig& config,
                          Eigen::MatrixXd* keep_recon = nullptr);

} // namespace pdmd
