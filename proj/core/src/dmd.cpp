#include "pdmd/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include <fstream>

namespace pdmd {

SplitPair split_lr(const Eigen::Ref<const Eigen::MatrixXd>& window) {
    if (window.cols() < 2) {
        throw DimensionError("split_lr: need at least two columns");
    }
    const Eigen::Index m = window.cols() - 1;
    return SplitPair{window.leftCols(m), window.rightCols(m)};
}

TruncatedSvd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& m, int rank,
                           double sv_floor) {
    const Eigen::Index max_rank = std::min(m.rows(), m.cols());
    if (rank < 1 || rank > max_rank) {
        throw DimensionError("truncated_svd: rank " + std::to_string(rank) +
                             " outside [1, " + std::to_string(max_rank) + "]");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) {
        throw DegenerateInputError("truncated_svd: all singular values are zero");
    }
    Eigen::Index keep = std::min<Eigen::Index>(rank, sv.size());
    if (sv_floor > 0.0) {
        while (keep > 1 && sv(keep - 1) < sv_floor * sv(0)) {
            --keep;
        }
    }
    // Trailing exact zeros are never invertible; drop them regardless of the floor.
    while (keep > 1 && sv(keep - 1) == 0.0) {
        --keep;
    }
    if (sv(keep - 1) == 0.0) {
        throw DegenerateInputError("truncated_svd: all singular values are zero");
    }
    TruncatedSvd out;
    out.modes_left = svd.matrixU().leftCols(keep);
    out.singular = sv.head(keep);
    out.modes_right = svd.matrixV().leftCols(keep);
    return out;
}

namespace detail {

SpectralFit fit_spectral(const Eigen::Ref<const Eigen::MatrixXd>& left,
                         const Eigen::Ref<const Eigen::MatrixXd>& right, int rank,
                         double sv_floor, ColumnWindow window) {
    const TruncatedSvd svd = truncated_svd(left, rank, sv_floor);
    const Eigen::Index r = svd.rank();

    // lift = right * V * Sigma^{-1}; reduced operator = Psi^T * lift.
    Eigen::MatrixXd lift = right * svd.modes_right;
    lift.array().rowwise() /= svd.singular.transpose().array();
    const Eigen::MatrixXd reduced = svd.modes_left.transpose() * lift;
    if (!reduced.allFinite()) {
        throw SpectralError("fit_spectral: reduced operator is nonfinite (singular value underflow)",
                            window.start, window.len);
    }

    Eigen::EigenSolver<Eigen::MatrixXd> eig(reduced);
    if (eig.info() != Eigen::Success) {
        throw SpectralError("fit_spectral: eigendecomposition failed", window.start, window.len);
    }
    Eigen::VectorXcd eigvals = eig.eigenvalues();
    Eigen::MatrixXcd eigvecs = eig.eigenvectors();
    if (!eigvals.allFinite() || !eigvecs.allFinite()) {
        throw SpectralError("fit_spectral: nonfinite eigendecomposition", window.start,
                            window.len);
    }

    // Deterministic report order: |lambda| desc, then Re desc, then Im desc.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ma = std::abs(eigvals(a));
        const double mb = std::abs(eigvals(b));
        if (ma != mb) return ma > mb;
        if (eigvals(a).real() != eigvals(b).real()) return eigvals(a).real() > eigvals(b).real();
        return eigvals(a).imag() > eigvals(b).imag();
    });

    SpectralFit fit;
    fit.eigvals.resize(r);
    Eigen::MatrixXcd w_sorted(r, r);
    for (Eigen::Index j = 0; j < r; ++j) {
        fit.eigvals(j) = eigvals(order[static_cast<std::size_t>(j)]);
        w_sorted.col(j) = eigvecs.col(order[static_cast<std::size_t>(j)]);
    }
    // Modes are lifted through the POD basis (Psi * W) rather than through
    // right * V * Sigma^{-1} * W: the two coincide on A-invariant data, but
    // the latter scales each column by its eigenvalue, which turns strongly
    // damped modes into noise and loses several orders of reconstruction
    // accuracy on transient windows.
    fit.modes = svd.modes_left.cast<std::complex<double>>() * w_sorted;
    return fit;
}

DmdModel finish_model(Eigen::MatrixXcd modes, Eigen::VectorXcd eigvals,
                      const Eigen::Ref<const Eigen::VectorXd>& x0, TimeGrid grid,
                      ColumnWindow window) {
    // Drop numerically zero mode columns (they carry no state and cannot be
    // normalized), then scale the survivors to unit 2-norm; the amplitudes
    // absorb the scale.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
        if (modes.col(j).norm() > 0.0) {
            keep.push_back(j);
        }
    }
    if (keep.empty()) {
        throw SpectralError("exact_dmd: all lifted modes are zero", window.start, window.len);
    }
    DmdModel model;
    model.modes.resize(modes.rows(), static_cast<Eigen::Index>(keep.size()));
    model.eigvals.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const Eigen::Index src = keep[j];
        Eigen::VectorXcd col = modes.col(src) / modes.col(src).norm();
        // Phase convention: the entry of largest modulus is made real and
        // positive, so modes are independent of backend sign choices.
        Eigen::Index pivot = 0;
        col.cwiseAbs().maxCoeff(&pivot);
        const std::complex<double> z = col(pivot);
        col *= std::conj(z) / std::abs(z);
        model.modes.col(static_cast<Eigen::Index>(j)) = col;
        model.eigvals(static_cast<Eigen::Index>(j)) = eigvals(src);
    }
    model.rank = static_cast<int>(keep.size());
    model.grid = grid;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> lsq(model.modes);
    const Eigen::VectorXcd x0c = x0.cast<std::complex<double>>();
    model.amps = lsq.solve(x0c);
    const double x0_norm = x0.norm();
    const double residual = (model.modes * model.amps - x0c).norm();
    model.fit_residual = (x0_norm > 0.0) ? residual / x0_norm : residual;
    return model;
}

} // namespace detail

DmdModel exact_dmd(const Eigen::Ref<const Eigen::MatrixXd>& window, TimeGrid grid,
                   int rank, double sv_floor) {
    if (window.cols() < 2) {
        throw DimensionError("exact_dmd: need at least two columns");
    }
    const Eigen::Index max_rank = std::min(window.rows(), window.cols() - 1);
    if (rank < 1 || rank > max_rank) {
        throw DimensionError("exact_dmd: rank " + std::to_string(rank) + " outside [1, " +
                             std::to_string(max_rank) + "]");
    }
    const SplitPair pair = split_lr(window);
    const ColumnWindow here{0, static_cast<std::size_t>(window.cols())};
    detail::SpectralFit fit = detail::fit_spectral(pair.left, pair.right, rank, sv_floor, here);
    return detail::finish_model(std::move(fit.modes), std::move(fit.eigvals), window.col(0),
                                grid, here);
}

DmdModel exact_dmd(const SnapshotMatrix& s, ColumnWindow w, int rank, double sv_floor) {
    try {
        return exact_dmd(s.columns(w), s.window_grid(w), rank, sv_floor);
    } catch (const SpectralError& e) {
        throw SpectralError(e.what(), w.start + e.window_start, w.len);
    }
}

Reconstruction reconstruct(const DmdModel& model, std::size_t k_begin, std::size_t k_count) {
    if (k_count == 0 || k_begin + k_count > model.grid.count) {
        throw DimensionError("reconstruct: k range outside the fitted window");
    }
    const Eigen::Index r = model.eigvals.size();
    const Eigen::Index n = model.modes.rows();
    const auto kc = static_cast<Eigen::Index>(k_count);

    Eigen::VectorXd log_mod(r);
    Eigen::VectorXd arg(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double mod = std::abs(model.eigvals(i));
        log_mod(i) = (mod > 0.0) ? std::log(mod) : 0.0;
        arg(i) = std::arg(model.eigvals(i));
    }

    // C(i, j) = lambda_i^(k_begin + j) * b_i, via the principal branch
    // lambda^k = exp(k log|lambda|) * (cos k arg + i sin k arg).
    Eigen::MatrixXcd coeffs(r, kc);
    for (Eigen::Index j = 0; j < kc; ++j) {
        const double k = static_cast<double>(k_begin + static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < r; ++i) {
            const double mod = std::abs(model.eigvals(i));
            if (mod == 0.0) {
                coeffs(i, j) = (k == 0.0) ? model.amps(i) : std::complex<double>(0.0, 0.0);
                continue;
            }
            const double exponent = k * log_mod(i);
            if (exponent > 709.0) {
                throw OverflowError("reconstruct: |lambda|^k overflows for lambda = (" +
                                        std::to_string(model.eigvals(i).real()) + ", " +
                                        std::to_string(model.eigvals(i).imag()) + ") at k = " +
                                        std::to_string(k_begin + static_cast<std::size_t>(j)),
                                    model.eigvals(i).real(), model.eigvals(i).imag());
            }
            coeffs(i, j) = std::polar(std::exp(exponent), k * arg(i)) * model.amps(i);
        }
    }

    const Eigen::MatrixXcd states = model.modes * coeffs;
    if (!states.allFinite()) {
        throw OverflowError("reconstruct: nonfinite reconstruction", 0.0, 0.0);
    }
    Reconstruction out;
    out.values = states.real();
    out.max_imag = (n > 0) ? states.imag().cwiseAbs().maxCoeff() : 0.0;
    return out;
}

double frob_error(const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("frob_error: shape mismatch");
    }
    const double ref = a.norm();
    if (ref == 0.0) {
        throw DegenerateInputError("frob_error: reference matrix has zero norm");
    }
    return (a - b).norm() / ref;
}

// -- model serialization ------------------------------------------------------

void save_dmd_model(const DmdModel& model, const std::filesystem::path& json_path,
                    std::size_t window_start) {
    nlohmann::json j;
    j["rank"] = model.rank;
    j["fit_residual"] = model.fit_residual;
    j["window"] = {{"start", window_start},
                   {"t0", model.grid.t0},
                   {"dt_snap", model.grid.dt_snap},
                   {"count", model.grid.count}};
    auto pairs = [](const Eigen::VectorXcd& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            arr.push_back({v(i).real(), v(i).imag()});
        }
        return arr;
    };
    j["eigvals"] = pairs(model.eigvals);
    j["amps"] = pairs(model.amps);

    std::filesystem::path modes_path = json_path;
    modes_path.replace_extension();
    modes_path += "_modes.pdmd1";
    j["modes_file"] = modes_path.filename().string();

    Eigen::MatrixXd stacked(2 * model.modes.rows(), model.modes.cols());
    stacked.topRows(model.modes.rows()) = model.modes.real();
    stacked.bottomRows(model.modes.rows()) = model.modes.imag();
    write_pdmd1(modes_path, stacked, Layout::single,
                static_cast<std::uint64_t>(stacked.rows()), 0.0, 1.0);

    std::ofstream out(json_path, std::ios::trunc);
    if (!out) {
        throw IoError("save_dmd_model: cannot open " + json_path.string());
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw IoError("save_dmd_model: short write to " + json_path.string());
    }
}

DmdModel load_dmd_model(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) {
        throw IoError("load_dmd_model: cannot open " + json_path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_dmd_model: bad JSON in " + json_path.string() + ": " + e.what());
    }

    DmdModel model;
    try {
        model.rank = j.at("rank").get<int>();
        model.fit_residual = j.at("fit_residual").get<double>();
        const auto& w = j.at("window");
        model.grid = TimeGrid{w.at("t0").get<double>(), w.at("dt_snap").get<double>(),
                              w.at("count").get<std::size_t>()};
        auto unpairs = [](const nlohmann::json& arr) {
            Eigen::VectorXcd v(arr.size());
            for (std::size_t i = 0; i < arr.size(); ++i) {
                v(static_cast<Eigen::Index>(i)) =
                    std::complex<double>(arr[i][0].get<double>(), arr[i][1].get<double>());
            }
            return v;
        };
        model.eigvals = unpairs(j.at("eigvals"));
        model.amps = unpairs(j.at("amps"));

        const auto modes_file = j.at("modes_file").get<std::string>();
        const RawPdmd1 raw = read_pdmd1(json_path.parent_path() / modes_file);
        const Eigen::Index n = raw.data.rows() / 2;
        model.modes = raw.data.topRows(n).cast<std::complex<double>>();
        model.modes.imag() = raw.data.bottomRows(n);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_dmd_model: missing field in " + json_path.string() + ": " +
                          e.what());
    }
    if (model.modes.cols() != model.eigvals.size() || model.eigvals.size() != model.amps.size()) {
        throw FormatError("load_dmd_model: inconsistent mode/eigenvalue sizes in " +
                          json_path.string());
    }
    return model;
}

} // namespace pdmd
