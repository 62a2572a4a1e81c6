#ifndef IMV_DATAIO_HPP
#define IMV_DATAIO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "imv/ndarray.hpp"

namespace imv {

/// Rectangular numeric table; the target column is always last. Entirely
/// non-numeric columns (timestamps and the like) are dropped at load time,
/// rows with a missing cell are dropped and counted.
struct SeriesTable {
    std::vector<std::string> columns;
    std::vector<double> values;  // row-major, rows() x cols()
    std::size_t n_rows = 0;
    std::size_t dropped_rows = 0;
    std::vector<std::string> ignored_columns;

    std::size_t rows() const { return n_rows; }
    std::size_t cols() const { return columns.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }
};

/// Parses an RFC-4180 CSV with header and moves `target_column` to the last
/// position. Empty and NA/NaN cells count as missing.
SeriesTable load_csv(const std::string& path, const std::string& target_column);

/// Parses CSV text (same rules as load_csv); `origin` names the source in errors.
SeriesTable parse_csv(const std::string& text, const std::string& target_column,
                      const std::string& origin);

void write_csv(const SeriesTable& table, const std::string& path);

struct Standardization {
    std::vector<double> mean, stdev;  // per column, channel order

    double to_std(double v, std::size_t c) const { return (v - mean[c]) / stdev[c]; }
    double to_orig(double v, std::size_t c) const { return v * stdev[c] + mean[c]; }
};

/// Per-column z-score using statistics of the first `train_rows` rows only
/// (no leakage into validation/test). Constant columns get a 1e-8 std floor.
std::pair<SeriesTable, Standardization> standardize(const SeriesTable& table,
                                                    std::size_t train_rows);

enum class Split : std::uint8_t { Train, Val, Test };

/// M = L - T sliding windows over a table: window i covers rows [i, i+T),
/// its target is row i+T's last column. Splits are chronological by window
/// start; train gets ceil(f_train * M) windows so a lone window lands there.
struct WindowedDataset {
    std::size_t window = 0;  // T
    std::size_t n_vars = 0;  // N
    std::vector<NdArray> inputs;     // M windows of [T x N]
    std::vector<double> targets;     // y_{T+1}, same units as the table
    std::vector<Split> split;
    std::vector<std::size_t> start;  // window start row
    Standardization standardization;
    std::vector<std::string> columns;

    std::size_t size() const { return inputs.size(); }
    std::size_t count(Split s) const;
    std::vector<std::size_t> indices(Split s) const;
};

WindowedDataset make_windows(const SeriesTable& table, std::size_t window,
                             std::array<double, 3> fractions);

/// standardize (train rows only) + make_windows in one step; the returned
/// dataset carries the statistics used.
WindowedDataset prepare_dataset(const SeriesTable& table, std::size_t window,
                                std::array<double, 3> fractions);

}  // namespace imv

#endif  // IMV_DATAIO_HPP
