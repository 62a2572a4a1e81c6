#include "imv/cell.hpp"

#include <array>
#include <cmath>

#include "imv/errors.hpp"

namespace imv {

namespace {

void check_input(const CellConfig& cfg, const NdArray& x) {
    if (x.rank() != 2 || x.shape[0] != cfg.n_vars || x.shape[1] != cfg.input_dim_per_var)
        throw DimensionError("cell: input must be [" + std::to_string(cfg.n_vars) + "x" +
                             std::to_string(cfg.input_dim_per_var) + "], got " +
                             shape_str(x.shape));
}

void fill_uniform(NdArray& a, Rng& rng, double scale) {
    for (double& v : a.data) v = rng.uniform(-scale, scale);
}

Tape& scratch_tape() {
    thread_local Tape tape;
    tape.reset();
    return tape;
}

}  // namespace

CellState zero_state(const CellConfig& cfg) {
    CellState st;
    st.h = NdArray::zeros({cfg.n_vars, cfg.per_var_dim});
    if (cfg.variant == Variant::Full)
        st.c = NdArray::zeros({cfg.layer_size()});
    else
        st.c = NdArray::zeros({cfg.n_vars, cfg.per_var_dim});
    return st;
}

void init_cell_params(const CellConfig& cfg, Rng& rng, Parameters& out) {
    const std::size_t n = cfg.n_vars, d = cfg.per_var_dim, d0 = cfg.input_dim_per_var;
    const std::size_t D = cfg.layer_size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));

    fill_uniform(out.add("cell.w_j", NdArray::zeros({n, d, d})), rng, scale);
    fill_uniform(out.add("cell.u_j", NdArray::zeros({n, d, d0})), rng, scale);
    out.add("cell.b_j", NdArray::zeros({n, d}));

    if (cfg.variant == Variant::Full) {
        fill_uniform(out.add("cell.gates.w", NdArray::zeros({3 * D, n * d0 + D})), rng, scale);
        NdArray& b = out.add("cell.gates.b", NdArray::zeros({3 * D}));
        for (std::size_t i = D; i < 2 * D; ++i) b.data[i] = 1.0;  // forget gate
    } else {
        fill_uniform(out.add("cell.gates.W", NdArray::zeros({n, 3 * d, d})), rng, scale);
        fill_uniform(out.add("cell.gates.U", NdArray::zeros({n, 3 * d, d0})), rng, scale);
        NdArray& b = out.add("cell.gates.b", NdArray::zeros({n, 3 * d}));
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = d; i < 2 * d; ++i) b.at2(v, i) = 1.0;
    }
}

CellVars register_cell(Tape& tape, const CellConfig& cfg, const Parameters& params) {
    CellVars cv;
    cv.w_j = tape.param(params.at("cell.w_j"));
    cv.u_j = tape.param(params.at("cell.u_j"));
    cv.b_j = tape.param(params.at("cell.b_j"));
    if (cfg.variant == Variant::Full) {
        cv.gate_w = tape.param(params.at("cell.gates.w"));
        cv.gate_b = tape.param(params.at("cell.gates.b"));
    } else {
        cv.gate_tw = tape.param(params.at("cell.gates.W"));
        cv.gate_tu = tape.param(params.at("cell.gates.U"));
        cv.gate_tb = tape.param(params.at("cell.gates.b"));
    }
    return cv;
}

Var hidden_update_node(Tape& tape, const CellConfig& cfg, const CellVars& cv, Var h_prev,
                       Var x) {
    (void)cfg;
    Var pre = tape.add(tape.add(tape.tensor_dot(cv.w_j, h_prev), tape.tensor_dot(cv.u_j, x)),
                       cv.b_j);
    return tape.tanh(pre);
}

StateVars step_node(Tape& tape, const CellConfig& cfg, const CellVars& cv, const StateVars& st,
                    Var x) {
    const std::size_t N = cfg.n_vars, d = cfg.per_var_dim, D = cfg.layer_size();
    Var j = hidden_update_node(tape, cfg, cv, st.h, x);
    StateVars nxt;
    if (cfg.variant == Variant::Full) {
        std::array<Var, 2> zs{tape.vectorize(x), tape.vectorize(st.h)};
        Var zin = tape.concat_n(zs);
        Var pre = tape.add(tape.matvec(cv.gate_w, zin), cv.gate_b);
        Var gi = tape.sigmoid(tape.slice(pre, 0, D));
        Var gf = tape.sigmoid(tape.slice(pre, D, D));
        Var go = tape.sigmoid(tape.slice(pre, 2 * D, D));
        nxt.c = tape.add(tape.mul(gf, st.c), tape.mul(gi, tape.vectorize(j)));
        nxt.h = tape.matricize(tape.mul(go, tape.tanh(nxt.c)), N, d);
    } else {
        Var pre = tape.add(
            tape.add(tape.tensor_dot(cv.gate_tw, st.h), tape.tensor_dot(cv.gate_tu, x)),
            cv.gate_tb);
        Var g = tape.sigmoid(pre);
        Var gi = tape.slice_cols(g, 0, d);
        Var gf = tape.slice_cols(g, d, d);
        Var go = tape.slice_cols(g, 2 * d, d);
        nxt.c = tape.add(tape.mul(gf, st.c), tape.mul(gi, j));
        nxt.h = tape.mul(go, tape.tanh(nxt.c));
    }
    return nxt;
}

StateVars zero_state_node(Tape& tape, const CellConfig& cfg) {
    CellState st = zero_state(cfg);
    return {tape.constant(st.h), tape.constant(st.c)};
}

std::vector<Var> unroll_node(Tape& tape, const CellConfig& cfg, const CellVars& cv,
                             std::span<const NdArray> xs) {
    if (xs.empty()) throw ArgumentError("unroll: empty input sequence");
    std::vector<Var> hs;
    hs.reserve(xs.size());
    StateVars st = zero_state_node(tape, cfg);
    for (const NdArray& x : xs) {
        check_input(cfg, x);
        st = step_node(tape, cfg, cv, st, tape.constant(x));
        hs.push_back(st.h);
    }
    return hs;
}

NdArray hidden_update(const CellConfig& cfg, const Parameters& params, const NdArray& h_prev,
                      const NdArray& x) {
    check_input(cfg, x);
    if (h_prev.rank() != 2 || h_prev.shape[0] != cfg.n_vars || h_prev.shape[1] != cfg.per_var_dim)
        throw DimensionError("hidden_update: h_prev must be [" + std::to_string(cfg.n_vars) +
                             "x" + std::to_string(cfg.per_var_dim) + "], got " +
                             shape_str(h_prev.shape));
    Tape& tape = scratch_tape();
    CellVars cv = register_cell(tape, cfg, params);
    Var out = hidden_update_node(tape, cfg, cv, tape.constant(h_prev), tape.constant(x));
    return tape.val(out);
}

namespace {

CellState step_value(const CellConfig& cfg, const Parameters& params, const CellState& st,
                     const NdArray& x) {
    check_input(cfg, x);
    Tape& tape = scratch_tape();
    CellVars cv = register_cell(tape, cfg, params);
    StateVars sv{tape.constant(st.h), tape.constant(st.c)};
    StateVars nxt = step_node(tape, cfg, cv, sv, tape.constant(x));
    return {tape.val(nxt.h), tape.val(nxt.c)};
}

}  // namespace

CellState step_full(const CellConfig& cfg, const Parameters& params, const CellState& st,
                    const NdArray& x) {
    if (cfg.variant != Variant::Full)
        throw ContractError("step_full: config variant is not Full");
    return step_value(cfg, params, st, x);
}

CellState step_tensor(const CellConfig& cfg, const Parameters& params, const CellState& st,
                      const NdArray& x) {
    if (cfg.variant != Variant::Tensor)
        throw ContractError("step_tensor: config variant is not Tensor");
    return step_value(cfg, params, st, x);
}

std::vector<NdArray> unroll(const CellConfig& cfg, const Parameters& params,
                            std::span<const NdArray> xs) {
    if (xs.empty()) throw ArgumentError("unroll: empty input sequence");
    Tape& tape = scratch_tape();
    CellVars cv = register_cell(tape, cfg, params);
    std::vector<Var> hs = unroll_node(tape, cfg, cv, xs);
    std::vector<NdArray> out;
    out.reserve(hs.size());
    for (Var h : hs) out.push_back(tape.val(h));
    return out;
}

ParamCount count_params(const CellConfig& cfg) {
    if (cfg.input_dim_per_var != 1)
        throw ConfigError("count_params: closed-form accounting assumes d0 == 1, got d0 = " +
                          std::to_string(cfg.input_dim_per_var));
    const long long N = static_cast<long long>(cfg.n_vars);
    const long long d = static_cast<long long>(cfg.per_var_dim);
    const long long D = N * d;
    ParamCount pc;
    pc.standard_lstm = 4 * D * D + 4 * N * D + 4 * D;
    const long long dd_over_n = N * d * d;  // D^2 / N, exact
    if (cfg.variant == Variant::Full)
        pc.reduction = (N - 1) * D + (D * D - dd_over_n);
    else
        pc.reduction = 4 * (N - 1) * D + 4 * (D * D - dd_over_n);
    pc.this_variant = pc.standard_lstm - pc.reduction;
    return pc;
}

long long count_params_literal(const CellConfig& cfg) {
    const long long N = static_cast<long long>(cfg.n_vars);
    const long long d = static_cast<long long>(cfg.per_var_dim);
    const long long d0 = static_cast<long long>(cfg.input_dim_per_var);
    const long long D = N * d;
    long long eq1 = N * d * d + N * d * d0 + N * d;
    if (cfg.variant == Variant::Full) return eq1 + 3 * D * (N * d0 + D) + 3 * D;
    return eq1 + N * (3 * d) * d + N * (3 * d) * d0 + N * (3 * d);
}

FlopCount step_flop_estimate(const CellConfig& cfg) {
    const long long N = static_cast<long long>(cfg.n_vars);
    const long long d = static_cast<long long>(cfg.per_var_dim);
    const long long d0 = static_cast<long long>(cfg.input_dim_per_var);
    const long long D = N * d;
    FlopCount fc;
    // four update blocks plus the three elementwise gate applications
    fc.full = 4 * D * (N * d0 + D) + 3 * D;
    fc.tensor = 4 * (N * d * d + N * d * d0) + 3 * D;
    return fc;
}

}  // namespace imv
