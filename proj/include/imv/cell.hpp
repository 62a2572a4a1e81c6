#ifndef IMV_CELL_HPP
#define IMV_CELL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "imv/ndarray.hpp"
#include "imv/params.hpp"
#include "imv/rng.hpp"
#include "imv/tape.hpp"

namespace imv {

enum class Variant : std::uint8_t { Full, Tensor };

struct CellConfig {
    std::size_t n_vars = 1;           // N, includes the autoregressive target channel
    std::size_t per_var_dim = 1;      // d
    std::size_t input_dim_per_var = 1;  // d0
    Variant variant = Variant::Tensor;

    std::size_t layer_size() const { return n_vars * per_var_dim; }  // D = N*d
};

/// h is the N x d hidden matrix; c is [D] for Full, [N x d] for Tensor.
struct CellState {
    NdArray h, c;
};

CellState zero_state(const CellConfig& cfg);

/// Allocates the cell's trainable tensors under their canonical names
/// (cell.w_j, cell.u_j, cell.b_j and the variant's gate tensors). Stacked
/// gate tensors pack the gates in (i, f, o) order, fixed for checkpoint
/// portability. Weights are uniform in [-1/sqrt(D), 1/sqrt(D)], biases zero
/// except the forget-gate bias which starts at +1.
void init_cell_params(const CellConfig& cfg, Rng& rng, Parameters& out);

/// Tape handles for one forward pass over the cell parameters.
struct CellVars {
    Var w_j, u_j, b_j;
    Var gate_w, gate_b;            // Full: [3D x (N*d0+D)], [3D]
    Var gate_tw, gate_tu, gate_tb; // Tensor: [N x 3d x d], [N x 3d x d0], [N x 3d]
};

struct StateVars {
    Var h, c;
};

CellVars register_cell(Tape& tape, const CellConfig& cfg, const Parameters& params);

// Graph builders. Row n of the hidden update depends only on row n of
// h_prev and x (block-diagonal tensor-dot).
Var hidden_update_node(Tape& tape, const CellConfig& cfg, const CellVars& cv, Var h_prev, Var x);
StateVars step_node(Tape& tape, const CellConfig& cfg, const CellVars& cv, const StateVars& st,
                    Var x);
StateVars zero_state_node(Tape& tape, const CellConfig& cfg);
std::vector<Var> unroll_node(Tape& tape, const CellConfig& cfg, const CellVars& cv,
                             std::span<const NdArray> xs);

// Value-level API (runs a scratch tape internally).
NdArray hidden_update(const CellConfig& cfg, const Parameters& params, const NdArray& h_prev,
                      const NdArray& x);
CellState step_full(const CellConfig& cfg, const Parameters& params, const CellState& st,
                    const NdArray& x);
CellState step_tensor(const CellConfig& cfg, const Parameters& params, const CellState& st,
                      const NdArray& x);
std::vector<NdArray> unroll(const CellConfig& cfg, const Parameters& params,
                            std::span<const NdArray> xs);

/// Parameter-count accounting for a layer of size D = N*d over N univariate
/// inputs (requires d0 == 1).
struct ParamCount {
    long long this_variant = 0;
    long long standard_lstm = 0;
    long long reduction = 0;
};
ParamCount count_params(const CellConfig& cfg);

/// Literal number of elements in the cell's tensors (any d0).
long long count_params_literal(const CellConfig& cfg);

/// Per-step multiply counts for the two variants at this layer geometry.
/// The Full variant is costed at its standard-LSTM-equivalent size (four
/// dense update blocks), the basis the complexity comparison uses; Tensor is
/// costed with all four blocks block-diagonal.
struct FlopCount {
    long long full = 0;
    long long tensor = 0;
};
FlopCount step_flop_estimate(const CellConfig& cfg);

}  // namespace imv

#endif  // IMV_CELL_HPP
