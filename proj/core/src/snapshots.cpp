#include "pdmd/snapshots.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace pdmd {

static_assert(std::endian::native == std::endian::little,
              "PDMD1 I/O assumes a little-endian host");

void TimeGrid::validate() const {
    if (!(dt_snap > 0.0)) {
        throw DimensionError("TimeGrid: dt_snap must be positive");
    }
    if (count < 2) {
        throw DimensionError("TimeGrid: need at least two snapshots");
    }
}

SnapshotMatrix::SnapshotMatrix(Eigen::MatrixXd data, TimeGrid grid, Layout layout,
                               std::size_t block)
    : data_(std::move(data)), grid_(grid), layout_(layout), block_(block) {
    grid_.validate();
    const auto r = static_cast<std::size_t>(data_.rows());
    const auto c = static_cast<std::size_t>(data_.cols());
    if (c != grid_.count) {
        throw DimensionError("SnapshotMatrix: column count does not match grid");
    }
    const std::size_t expected = (layout_ == Layout::coupled) ? 2 * block_ : block_;
    if (block_ == 0 || r != expected) {
        throw DimensionError("SnapshotMatrix: rows inconsistent with layout block size");
    }
    if (!data_.allFinite()) {
        throw DimensionError("SnapshotMatrix: entries must be finite");
    }
}

Eigen::Ref<const Eigen::MatrixXd> SnapshotMatrix::columns(ColumnWindow w) const {
    if (w.len == 0 || w.start + w.len > cols()) {
        throw DimensionError("SnapshotMatrix: window out of range");
    }
    return data_.middleCols(static_cast<Eigen::Index>(w.start),
                            static_cast<Eigen::Index>(w.len));
}

TimeGrid SnapshotMatrix::window_grid(ColumnWindow w) const {
    if (w.len == 0 || w.start + w.len > cols()) {
        throw DimensionError("SnapshotMatrix: window out of range");
    }
    return TimeGrid{grid_.time_at(w.start), grid_.dt_snap, w.len};
}

Eigen::Ref<const Eigen::MatrixXd> SnapshotMatrix::field_block(Field f) const {
    const auto n = static_cast<Eigen::Index>(block_);
    if (layout_ == Layout::single) {
        if (f != Field::u) {
            throw DimensionError("SnapshotMatrix: single layout has no field v");
        }
        return data_;
    }
    return (f == Field::u) ? data_.topRows(n) : data_.bottomRows(n);
}

SnapshotMatrix stack_coupled(const Eigen::MatrixXd& u_fields,
                             const Eigen::MatrixXd& v_fields, TimeGrid grid) {
    if (u_fields.rows() != v_fields.rows() || u_fields.cols() != v_fields.cols()) {
        throw DimensionError("stack_coupled: u and v shapes differ");
    }
    if (static_cast<std::size_t>(u_fields.cols()) != grid.count) {
        throw DimensionError("stack_coupled: column count does not match grid");
    }
    Eigen::MatrixXd data(2 * u_fields.rows(), u_fields.cols());
    data.topRows(u_fields.rows()) = u_fields;
    data.bottomRows(v_fields.rows()) = v_fields;
    return SnapshotMatrix(std::move(data), grid, Layout::coupled,
                          static_cast<std::size_t>(u_fields.rows()));
}

std::vector<ColumnWindow> partition(std::size_t count, std::size_t n_parts,
                                    std::size_t nu_star) {
    if (n_parts < 1) {
        throw DimensionError("partition: need at least one part");
    }
    const std::size_t nu = count / n_parts;
    // All windows have nu columns except the last, which absorbs the
    // remainder; the smallest window is therefore nu wide.
    const std::size_t min_len = nu;
    if (min_len <= 1 || min_len < nu_star) {
        throw PartitionTooFine("partition: N=" + std::to_string(n_parts) + " leaves windows of " +
                               std::to_string(min_len) + " < " + std::to_string(nu_star) +
                               " columns");
    }
    std::vector<ColumnWindow> windows;
    windows.reserve(n_parts);
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < n_parts; ++i) {
        windows.push_back({start, nu});
        start += nu;
    }
    windows.push_back({start, count - start});
    return windows;
}

std::vector<ColumnWindow> partition(const SnapshotMatrix& s, std::size_t n_parts,
                                    std::size_t nu_star) {
    return partition(s.cols(), n_parts, nu_star);
}

Eigen::VectorXd spatial_mean_series(const Eigen::Ref<const Eigen::MatrixXd>& coupled_data,
                                    std::size_t block, Field field) {
    const auto n = static_cast<Eigen::Index>(block);
    if (coupled_data.rows() != 2 * n) {
        throw DimensionError("spatial_mean_series: rows != 2*block");
    }
    const auto rows = (field == Field::u) ? coupled_data.topRows(n) : coupled_data.bottomRows(n);
    return rows.colwise().mean().transpose();
}

Eigen::VectorXd spatial_mean_series(const SnapshotMatrix& s, Field field) {
    return s.field_block(field).colwise().mean().transpose();
}

// -- PDMD1 I/O ---------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'D', 'M', 'D'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 3 * 8 + 2 * 8;

template <typename T>
void put(char*& p, T value) {
    std::memcpy(p, &value, sizeof(T));
    p += sizeof(T);
}

template <typename T>
T take(const char*& p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    p += sizeof(T);
    return value;
}

} // namespace

void write_pdmd1(const std::filesystem::path& path, const Eigen::MatrixXd& data,
                 Layout layout, std::uint64_t block, double t0, double dt_snap) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("write_pdmd1: cannot open " + path.string());
    }
    char header[kHeaderBytes] = {};
    char* p = header;
    std::memcpy(p, kMagic, 4);
    p += 4;
    put<std::uint8_t>(p, kVersion);
    put<std::uint8_t>(p, static_cast<std::uint8_t>(layout));
    p += 2; // reserved
    put<std::uint64_t>(p, static_cast<std::uint64_t>(data.rows()));
    put<std::uint64_t>(p, static_cast<std::uint64_t>(data.cols()));
    put<std::uint64_t>(p, block);
    put<double>(p, t0);
    put<double>(p, dt_snap);
    out.write(header, kHeaderBytes);
    // Eigen stores column-major, which is the on-disk order.
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(sizeof(double) * data.size()));
    if (!out) {
        throw IoError("write_pdmd1: short write to " + path.string());
    }
}

RawPdmd1 read_pdmd1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("read_pdmd1: cannot open " + path.string());
    }
    char header[kHeaderBytes];
    in.read(header, kHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes)) {
        throw FormatError("read_pdmd1: truncated header in " + path.string());
    }
    const char* p = header;
    if (std::memcmp(p, kMagic, 4) != 0) {
        throw FormatError("read_pdmd1: bad magic in " + path.string());
    }
    p += 4;
    const auto version = take<std::uint8_t>(p);
    if (version != kVersion) {
        throw FormatError("read_pdmd1: unsupported version " + std::to_string(version));
    }
    const auto layout_tag = take<std::uint8_t>(p);
    if (layout_tag > 1) {
        throw FormatError("read_pdmd1: unknown layout tag " + std::to_string(layout_tag));
    }
    if (p[0] != 0 || p[1] != 0) {
        throw FormatError("read_pdmd1: reserved header bytes not zero");
    }
    p += 2;
    const auto rows = take<std::uint64_t>(p);
    const auto cols = take<std::uint64_t>(p);
    const auto block = take<std::uint64_t>(p);
    const double t0 = take<double>(p);
    const double dt_snap = take<double>(p);
    if (rows == 0 || cols == 0) {
        throw FormatError("read_pdmd1: empty matrix in header");
    }

    RawPdmd1 raw;
    raw.layout = static_cast<Layout>(layout_tag);
    raw.block = block;
    raw.t0 = t0;
    raw.dt_snap = dt_snap;
    raw.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const auto payload = static_cast<std::streamsize>(sizeof(double) * rows * cols);
    in.read(reinterpret_cast<char*>(raw.data.data()), payload);
    if (in.gcount() != payload) {
        throw FormatError("read_pdmd1: truncated payload in " + path.string() + " (expected " +
                          std::to_string(rows * cols) + " values)");
    }
    return raw;
}

void SnapshotMatrix::save(const std::filesystem::path& path) const {
    write_pdmd1(path, data_, layout_, static_cast<std::uint64_t>(block_), grid_.t0,
                grid_.dt_snap);
}

SnapshotMatrix SnapshotMatrix::load(const std::filesystem::path& path) {
    RawPdmd1 raw = read_pdmd1(path);
    TimeGrid grid{raw.t0, raw.dt_snap, static_cast<std::size_t>(raw.data.cols())};
    return SnapshotMatrix(std::move(raw.data), grid, raw.layout,
                          static_cast<std::size_t>(raw.block));
}

} // namespace pdmd
