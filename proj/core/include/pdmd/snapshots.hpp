#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pdmd/errors.hpp"

namespace pdmd {

/// Uniform temporal grid of the stored snapshots. dt_snap is the spacing of
/// the *stored* columns (subsampling factor times the integrator step).
struct TimeGrid {
    double t0 = 0.0;
    double dt_snap = 1.0;
    std::size_t count = 2;

    double time_at(std::size_t k) const { return t0 + dt_snap * static_cast<double>(k); }
    void validate() const;
};

enum class Layout : std::uint8_t { single = 0, coupled = 1 };
enum class Field { u, v };

/// Contiguous range of snapshot columns [start, start+len).
struct ColumnWindow {
    std::size_t start = 0;
    std::size_t len = 0;
};

/// Dense snapshot dataset: one column per stored time. For coupled layout the
/// rows are the concatenation [u; v] with block() rows per field. Immutable
/// after construction; safe to share across threads.
class SnapshotMatrix {
public:
    SnapshotMatrix(Eigen::MatrixXd data, TimeGrid grid, Layout layout, std::size_t block);

    const Eigen::MatrixXd& data() const { return data_; }
    const TimeGrid& grid() const { return grid_; }
    Layout layout() const { return layout_; }
    /// Rows per field (n): rows() == 2*block() for coupled, == block() for single.
    std::size_t block() const { return block_; }
    std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }

    /// View of the columns in `w`. Throws DimensionError if `w` overruns.
    Eigen::Ref<const Eigen::MatrixXd> columns(ColumnWindow w) const;

    /// Time grid restricted to the columns in `w`.
    TimeGrid window_grid(ColumnWindow w) const;

    /// Per-field row blocks (coupled layout only for field v).
    Eigen::Ref<const Eigen::MatrixXd> field_block(Field f) const;

    /// Writes the dataset in the PDMD1 binary format (see file docs below).
    void save(const std::filesystem::path& path) const;
    static SnapshotMatrix load(const std::filesystem::path& path);

private:
    Eigen::MatrixXd data_;
    TimeGrid grid_;
    Layout layout_;
    std::size_t block_;
};

/// Builds the coupled dataset with columns x_k = [u_k; v_k].
/// Both inputs must be n x (m+1) and match grid.count.
SnapshotMatrix stack_coupled(const Eigen::MatrixXd& u_fields,
                             const Eigen::MatrixXd& v_fields,
                             TimeGrid grid);

/// Splits `count` columns into N contiguous disjoint windows covering all
/// columns: windows 0..N-2 have nu = floor(count/N) columns, the last absorbs
/// the remainder. Throws PartitionTooFine when the smallest window would have
/// fewer than nu_star columns (or <= 1, which a two-column fit requires).
std::vector<ColumnWindow> partition(std::size_t count, std::size_t n_parts,
                                    std::size_t nu_star = 10);
std::vector<ColumnWindow> partition(const SnapshotMatrix& s, std::size_t n_parts,
                                    std::size_t nu_star = 10);

/// Arithmetic mean over the grid values of one field, per snapshot.
Eigen::VectorXd spatial_mean_series(const SnapshotMatrix& s, Field field);
Eigen::VectorXd spatial_mean_series(const Eigen::Ref<const Eigen::MatrixXd>& coupled_data,
                                    std::size_t block, Field field);

// ---------------------------------------------------------------------------
// PDMD1 container format (little-endian):
//   bytes 0-3  magic "PDMD"
//   byte  4    version (1)
//   byte  5    layout tag (0 = single, 1 = coupled)
//   bytes 6-7  reserved, zero
//   u64        rows
//   u64        cols
//   u64        block size n
//   f64        t0
//   f64        dt_snap
//   rows*cols f64, column-major
// The raw functions below do not interpret the grid/layout beyond the header;
// SnapshotMatrix::save/load add the dataset invariants on top.
// ---------------------------------------------------------------------------

struct RawPdmd1 {
    Eigen::MatrixXd data;
    Layout layout = Layout::single;
    std::uint64_t block = 0;
    double t0 = 0.0;
    double dt_snap = 0.0;
};

void write_pdmd1(const std::filesystem::path& path, const Eigen::MatrixXd& data,
                 Layout layout, std::uint64_t block, double t0, double dt_snap);
RawPdmd1 read_pdmd1(const std::filesystem::path& path);

} // namespace pdmd
