#include "imv/model.hpp"

#include <cmath>

#include "imv/errors.hpp"

namespace imv {

Parameters init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Parameters params;
    init_cell_params(cfg.cell, rng, params);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.cell.layer_size()));
    init_head_params(cfg.head(), rng, scale, params);
    return params;
}

namespace {

std::size_t index_of(const Parameters& params, const std::string& name) {
    for (std::size_t i = 0; i < params.items.size(); ++i)
        if (params.items[i].first == name) return i;
    throw ContractError("ParamLayout: missing tensor '" + name + "'");
}

ParamLayout::NetIdx net_layout(const Parameters& params, const std::string& prefix) {
    return {index_of(params, prefix + ".w1"), index_of(params, prefix + ".b1"),
            index_of(params, prefix + ".w2"), index_of(params, prefix + ".b2")};
}

}  // namespace

ParamLayout ParamLayout::build(const ModelConfig& cfg, const Parameters& params) {
    ParamLayout l;
    l.w_j = index_of(params, "cell.w_j");
    l.u_j = index_of(params, "cell.u_j");
    l.b_j = index_of(params, "cell.b_j");
    if (cfg.cell.variant == Variant::Full) {
        l.gate_w = index_of(params, "cell.gates.w");
        l.gate_b = index_of(params, "cell.gates.b");
    } else {
        l.gate_tw = index_of(params, "cell.gates.W");
        l.gate_tu = index_of(params, "cell.gates.U");
        l.gate_tb = index_of(params, "cell.gates.b");
    }
    for (std::size_t n = 0; n < cfg.cell.n_vars; ++n)
        l.fn.push_back(net_layout(params, "head.fn." + std::to_string(n + 1)));
    l.f = net_layout(params, "head.f");
    for (std::size_t n = 0; n < cfg.cell.n_vars; ++n)
        l.phi.push_back(net_layout(params, "head.phi." + std::to_string(n + 1)));
    return l;
}

std::vector<Var> register_params(Tape& tape, const Parameters& params) {
    std::vector<Var> vars;
    register_params_into(tape, params, vars);
    return vars;
}

void register_params_into(Tape& tape, const Parameters& params, std::vector<Var>& out) {
    out.clear();
    out.reserve(params.items.size());
    for (const auto& [name, value] : params.items) out.push_back(tape.param(value));
}

std::vector<std::string> canonical_param_names(const ModelConfig& cfg) {
    std::vector<std::string> names{"cell.w_j", "cell.u_j", "cell.b_j"};
    if (cfg.cell.variant == Variant::Full) {
        names.push_back("cell.gates.w");
        names.push_back("cell.gates.b");
    } else {
        names.push_back("cell.gates.W");
        names.push_back("cell.gates.U");
        names.push_back("cell.gates.b");
    }
    auto add_net = [&](const std::string& prefix) {
        for (const char* leaf : {".w1", ".b1", ".w2", ".b2"}) names.push_back(prefix + leaf);
    };
    for (std::size_t n = 0; n < cfg.cell.n_vars; ++n)
        add_net("head.fn." + std::to_string(n + 1));
    add_net("head.f");
    for (std::size_t n = 0; n < cfg.cell.n_vars; ++n)
        add_net("head.phi." + std::to_string(n + 1));
    return names;
}

ModelGraph model_forward_node(Tape& tape, const ModelConfig& cfg, const ParamLayout& layout,
                              std::span<const Var> pvars, std::span<const NdArray> xs,
                              const double* y) {
    CellVars cv;
    cv.w_j = pvars[layout.w_j];
    cv.u_j = pvars[layout.u_j];
    cv.b_j = pvars[layout.b_j];
    if (cfg.cell.variant == Variant::Full) {
        cv.gate_w = pvars[layout.gate_w];
        cv.gate_b = pvars[layout.gate_b];
    } else {
        cv.gate_tw = pvars[layout.gate_tw];
        cv.gate_tu = pvars[layout.gate_tu];
        cv.gate_tb = pvars[layout.gate_tb];
    }
    HeadVars hv;
    auto net_vars = [&](const ParamLayout::NetIdx& idx) {
        return HeadVars::Net{pvars[idx.w1], pvars[idx.b1], pvars[idx.w2], pvars[idx.b2]};
    };
    for (const auto& idx : layout.fn) hv.fn.push_back(net_vars(idx));
    hv.f = net_vars(layout.f);
    for (const auto& idx : layout.phi) hv.phi.push_back(net_vars(idx));

    ModelGraph g;
    g.hidden = unroll_node(tape, cfg.cell, cv, xs);
    g.head = head_forward_node(tape, cfg.head(), hv, g.hidden, y);
    return g;
}

MixtureOutput model_forward(const ModelConfig& cfg, const Parameters& params,
                            std::span<const NdArray> xs, std::optional<double> y) {
    thread_local Tape tape;
    tape.reset();
    std::vector<Var> pvars = register_params(tape, params);
    ParamLayout layout = ParamLayout::build(cfg, params);
    double yv = y.value_or(0.0);
    ModelGraph g = model_forward_node(tape, cfg, layout, pvars, xs, y ? &yv : nullptr);

    const std::size_t N = cfg.cell.n_vars, d = cfg.cell.per_var_dim;
    const std::size_t A = attention_length(xs.size());
    MixtureOutput out;
    out.alpha = NdArray::zeros({N, A});
    out.g = NdArray::zeros({N, d});
    for (std::size_t n = 0; n < N; ++n) {
        const NdArray& a = tape.val(g.head.alpha[n]);
        const NdArray& gv = tape.val(g.head.g[n]);
        for (std::size_t t = 0; t < A; ++t) out.alpha.at2(n, t) = a.data[t];
        for (std::size_t j = 0; j < d; ++j) out.g.at2(n, j) = gv.data[j];
    }
    out.prior = tape.val(g.head.prior);
    out.mu = tape.val(g.head.mu);
    out.sigma = tape.val(g.head.sigma);
    if (g.head.has_y) out.log_lik = tape.val0(g.head.log_lik);
    return out;
}

std::vector<NdArray> window_to_inputs(const NdArray& window) {
    if (window.rank() != 2)
        throw DimensionError("window_to_inputs: expected [T x N], got " + shape_str(window.shape));
    const std::size_t T = window.shape[0], N = window.shape[1];
    std::vector<NdArray> xs;
    xs.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        NdArray x = NdArray::zeros({N, 1});
        for (std::size_t n = 0; n < N; ++n) x.data[n] = window.at2(t, n);
        xs.push_back(std::move(x));
    }
    return xs;
}

}  // namespace imv
