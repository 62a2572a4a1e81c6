#ifndef IMV_MODEL_HPP
#define IMV_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "imv/cell.hpp"
#include "imv/mixture.hpp"
#include "imv/params.hpp"
#include "imv/tape.hpp"

namespace imv {

/// Recurrent cell plus mixture-attention head.
struct ModelConfig {
    CellConfig cell;
    std::size_t head_width = 0;  // 0 -> per_var_dim
    double sigma_min = kSigmaMinDefault;

    HeadConfig head() const {
        return HeadConfig{cell.n_vars, cell.per_var_dim, head_width, sigma_min};
    }
};

/// All trainable tensors, cell first then head, in canonical order.
Parameters init_model_params(const ModelConfig& cfg, std::uint64_t seed);

/// Positions of the named tensors inside Parameters::items, resolved once so
/// the per-instance forward pass does no string lookups.
struct ParamLayout {
    std::size_t w_j = 0, u_j = 0, b_j = 0;
    std::size_t gate_w = 0, gate_b = 0;
    std::size_t gate_tw = 0, gate_tu = 0, gate_tb = 0;
    struct NetIdx {
        std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    };
    std::vector<NetIdx> fn, phi;
    NetIdx f;

    static ParamLayout build(const ModelConfig& cfg, const Parameters& params);
};

/// Registers every parameter on the tape in Parameters order, so gradients
/// read back by index line up with the optimizer's state.
std::vector<Var> register_params(Tape& tape, const Parameters& params);
void register_params_into(Tape& tape, const Parameters& params, std::vector<Var>& out);

/// Tensor names in canonical (initialization) order for this configuration.
std::vector<std::string> canonical_param_names(const ModelConfig& cfg);

struct ModelGraph {
    std::vector<Var> hidden;  // T hidden matrices [N x d]
    HeadNodes head;
};

/// Unrolls the cell over the inputs and applies the head. `y`, when given,
/// enables the likelihood nodes needed for training.
ModelGraph model_forward_node(Tape& tape, const ModelConfig& cfg, const ParamLayout& layout,
                              std::span<const Var> pvars, std::span<const NdArray> xs,
                              const double* y);

MixtureOutput model_forward(const ModelConfig& cfg, const Parameters& params,
                            std::span<const NdArray> xs, std::optional<double> y);

/// Splits a [T x N] window into the T per-step inputs of shape [N x 1].
std::vector<NdArray> window_to_inputs(const NdArray& window);

}  // namespace imv

#endif  // IMV_MODEL_HPP
