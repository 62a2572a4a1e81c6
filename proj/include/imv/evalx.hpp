#ifndef IMV_EVALX_HPP
#define IMV_EVALX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imv/dataio.hpp"
#include "imv/ndarray.hpp"

namespace imv {

double rmse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);

/// Variables (1-based) ordered by descending importance; ties break toward
/// the lower variable index.
std::vector<int> rank_variables(const NdArray& importance);

/// Exogenous variables (1-based channel indices, target excluded) ordered by
/// descending |Pearson correlation| between their lag-0 values and the
/// next-step target, computed on the first `train_rows` rows. Zero-variance
/// columns get correlation 0.
std::vector<int> pearson_rank(const SeriesTable& table, std::size_t train_rows);

/// Keeps the top ceil(fraction * (N-1)) exogenous variables of the ranking
/// plus the target channel; original column order is preserved.
WindowedDataset select_top_k(const WindowedDataset& ds, std::span<const int> ranking,
                             double fraction = 0.5);
SeriesTable select_columns(const SeriesTable& table, std::span<const int> ranking,
                           double fraction = 0.5);

/// 0-based channel indices kept by the selection rule (target included last).
std::vector<std::size_t> selected_channels(std::size_t n_vars, std::span<const int> ranking,
                                           double fraction);

struct Driver {
    std::size_t var = 1;   // 1-based exogenous variable index
    std::size_t lag = 0;
    double coeff = 0.0;
};

/// Synthetic benchmark: independent AR(1) exogenous series drive the target
/// with known lags and coefficients, plus Gaussian noise. Fully determined
/// by the seed.
struct SyntheticSpec {
    std::size_t n_exo = 6;
    std::size_t length = 2500;
    std::uint64_t seed = 42;
    std::vector<Driver> drivers = {{1, 2, 0.6}, {2, 0, 0.3}};
    bool nonlinear = false;   // tanh applied to the driver sum
    double noise_std = 0.1;
    double ar_coeff = 0.7;
};

/// The pinned configuration used by the acceptance benchmark.
SyntheticSpec default_benchmark();

SeriesTable generate_synthetic(const SyntheticSpec& spec);

/// Noiseless target component s(t) with y(t) = s(t) + noise; s is the
/// Bayes-optimal prediction of y(t) from the past, so rmse(y, s) estimates
/// the noise floor.
std::vector<double> synthetic_true_signal(const SyntheticSpec& spec);

/// FNV-1a over column names and the raw bits of the values; pins generator
/// output in tests.
std::uint64_t table_hash(const SeriesTable& table);

/// {"rmse": ..., "mae": ..., "n_test": ...} serialized as JSON text.
std::string metrics_report(std::span<const double> y, std::span<const double> yhat);

}  // namespace imv

#endif  // IMV_EVALX_HPP
