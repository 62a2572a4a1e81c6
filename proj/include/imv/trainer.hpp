#ifndef IMV_TRAINER_HPP
#define IMV_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "imv/dataio.hpp"
#include "imv/model.hpp"
#include "imv/rng.hpp"

namespace imv {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    double l2_coeff = 0.0;
    double grad_clip_norm = 5.0;  // 0 disables clipping
    std::uint64_t seed = 42;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    bool parallel = true;  // OpenMP over batch instances

    void validate() const;
};

/// Variable importance I (simplex over the N channels) and per-variable
/// temporal importance rows (each a simplex over the attended window steps).
struct ImportanceState {
    NdArray var_importance;       // [N]
    NdArray temporal_importance;  // [N x attention_length(T)]

    static ImportanceState uniform(std::size_t n_vars, std::size_t window);
};

/// Responsibilities q_n of each variable component for target y, computed in
/// log space from the mixture output.
NdArray posterior(const MixtureOutput& mix, double y);

/// Per-instance EM loss: -sum_n q_n log N(y; mu_n, sigma_n^2)
///                       -sum_n q_n log prior_n - sum_n q_n log I_n.
/// The last term uses a 1e-12 floor on I and never contributes gradients to
/// the network; q is treated as a constant.
double instance_loss(const MixtureOutput& mix, double y, const NdArray& q, const NdArray& I);

// gradients keyed by Parameters::items order
using GradVec = std::vector<NdArray>;

struct AdamState {
    GradVec m, v;
    long long t = 0;

    static AdamState init(const Parameters& params);
};

/// Bias-corrected Adam update. Adds l2_coeff * p to each gradient, applies
/// global-norm clipping, then steps; `grads` is modified in place.
void adam_step(Parameters& params, GradVec& grads, const TrainConfig& cfg, AdamState& state);

/// Windows pre-split into per-step cell inputs, built once per fit.
struct PreparedData {
    std::vector<std::vector<NdArray>> xs;  // per window: T inputs of [N x 1]
    const WindowedDataset* ds = nullptr;

    static PreparedData build(const WindowedDataset& ds);
};

/// Accumulated results of one batch: gradient sums of the optimized loss
/// terms, posterior and attention sums for the importance update, and the
/// full-loss sum for logging.
struct BatchStats {
    GradVec grad_sum;
    NdArray q_sum;      // [N]
    NdArray alpha_sum;  // [N x T]
    double loss_sum = 0.0;
    std::size_t count = 0;
    std::ptrdiff_t nonfinite_at = -1;  // position in the index list, -1 if fine
};

/// Reference implementation: one instance at a time, straight accumulation.
BatchStats batch_gradients_serial(const ModelConfig& cfg, const ParamLayout& layout,
                                  const Parameters& params, const PreparedData& data,
                                  std::span<const std::size_t> idx, const NdArray& I);

/// OpenMP version: fixed-size chunks accumulated independently and combined
/// in chunk order, so results are identical for any thread count and with
/// use_omp off (which runs the same chunk schedule sequentially).
BatchStats batch_gradients_parallel(const ModelConfig& cfg, const ParamLayout& layout,
                                    const Parameters& params, const PreparedData& data,
                                    std::span<const std::size_t> idx, const NdArray& I,
                                    bool use_omp = true);

/// One EM pass over the training split: per batch, E-step posteriors with
/// the current parameters, then an Adam step on the optimized loss terms;
/// afterwards I and the temporal rows are set to the epoch means of q and
/// alpha. Returns the mean (full) loss per training instance.
double em_epoch(const ModelConfig& cfg, Parameters& params, const ParamLayout& layout,
                const PreparedData& data, const TrainConfig& tcfg, ImportanceState& importance,
                AdamState& adam, Rng& shuffle_rng);

/// Convenience overload that prepares the dataset internally.
double em_epoch(const ModelConfig& cfg, Parameters& params, const WindowedDataset& ds,
                const TrainConfig& tcfg, ImportanceState& importance, AdamState& adam,
                Rng& shuffle_rng);

// --- single-instance helpers (tests and diagnostics) ---

struct InstanceEval {
    MixtureOutput mix;
    NdArray q;
    double loss_optimized = 0.0;
    double loss_full = 0.0;
    GradVec grads;
};

/// Forward + E-step + backward for one instance.
InstanceEval instance_backward(const ModelConfig& cfg, const Parameters& params,
                               std::span<const NdArray> xs, double y, const NdArray& I);

/// Value of the optimized loss terms with q held fixed (no E-step).
double loss_given_q(const ModelConfig& cfg, const Parameters& params,
                    std::span<const NdArray> xs, double y, const NdArray& q);

// --- evaluation ---

struct SplitMetrics {
    double rmse = 0.0, mae = 0.0;
    std::size_t n = 0;
};

/// Point predictions for the given windows, de-standardized to original units.
std::vector<double> predict_windows(const ModelConfig& cfg, const Parameters& params,
                                    const PreparedData& data,
                                    std::span<const std::size_t> idx, bool parallel);

SplitMetrics eval_split(const ModelConfig& cfg, const Parameters& params,
                        const PreparedData& data, Split split, bool parallel);

// --- fit and persistence ---

struct Checkpoint {
    ModelConfig model;
    std::size_t window = 0;
    std::vector<std::string> columns;  // channel order, target last
    Parameters params;
    ImportanceState importance;
    Standardization standardization;
    struct Meta {
        std::uint64_t seed = 0;
        std::size_t epoch = 0;  // epoch of the kept parameters (0 = initialization)
        double val_rmse = 0.0;
        std::vector<double> loss_history;
    } meta;
};

struct EpochInfo {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_rmse = 0.0;
    const ImportanceState* importance = nullptr;
};
using FitObserver = std::function<void(const EpochInfo&)>;

/// Runs em_epoch for the configured number of epochs and returns the
/// checkpoint with the best validation RMSE (train RMSE when the validation
/// split is empty).
Checkpoint fit(const WindowedDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
               const FitObserver& observer = nullptr);

/// Single-document JSON, written atomically (temp file + rename).
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace imv

#endif  // IMV_TRAINER_HPP
