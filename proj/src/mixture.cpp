#include "imv/mixture.hpp"

#include <array>
#include <cmath>

#include "imv/errors.hpp"

namespace imv {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

void fill_uniform(NdArray& a, Rng& rng, double scale) {
    for (double& v : a.data) v = rng.uniform(-scale, scale);
}

void add_net(Parameters& out, Rng& rng, double scale, const std::string& prefix,
             std::size_t in_dim, std::size_t width, std::size_t out_dim) {
    fill_uniform(out.add(prefix + ".w1", NdArray::zeros({width, in_dim})), rng, scale);
    out.add(prefix + ".b1", NdArray::zeros({width}));
    if (out_dim == 1) {
        fill_uniform(out.add(prefix + ".w2", NdArray::zeros({width})), rng, scale);
        out.add(prefix + ".b2", NdArray::zeros({1}));
    } else {
        fill_uniform(out.add(prefix + ".w2", NdArray::zeros({out_dim, width})), rng, scale);
        out.add(prefix + ".b2", NdArray::zeros({out_dim}));
    }
}

HeadVars::Net register_net(Tape& tape, const Parameters& params, const std::string& prefix) {
    HeadVars::Net net;
    net.w1 = tape.param(params.at(prefix + ".w1"));
    net.b1 = tape.param(params.at(prefix + ".b1"));
    net.w2 = tape.param(params.at(prefix + ".w2"));
    net.b2 = tape.param(params.at(prefix + ".b2"));
    return net;
}

// scalar-output net applied to a vector: w2 . tanh(W1 x + b1) + b2 -> [1]
Var scalar_net_node(Tape& tape, const HeadVars::Net& net, Var x) {
    Var hidden = tape.tanh(tape.add(tape.matvec(net.w1, x), net.b1));
    Var s = tape.dot(net.w2, hidden);
    return tape.add(s, net.b2);
}

Tape& scratch_tape() {
    thread_local Tape tape;
    tape.reset();
    return tape;
}

}  // namespace

void init_head_params(const HeadConfig& cfg, Rng& rng, double weight_scale, Parameters& out) {
    const std::size_t d = cfg.per_var_dim, a = cfg.w();
    for (std::size_t n = 0; n < cfg.n_vars; ++n)
        add_net(out, rng, weight_scale, "head.fn." + std::to_string(n + 1), d, a, 1);
    add_net(out, rng, weight_scale, "head.f", 2 * d, a, 1);
    for (std::size_t n = 0; n < cfg.n_vars; ++n)
        add_net(out, rng, weight_scale, "head.phi." + std::to_string(n + 1), 2 * d, a, 2);
}

HeadVars register_head(Tape& tape, const HeadConfig& cfg, const Parameters& params) {
    HeadVars hv;
    hv.fn.reserve(cfg.n_vars);
    hv.phi.reserve(cfg.n_vars);
    for (std::size_t n = 0; n < cfg.n_vars; ++n)
        hv.fn.push_back(register_net(tape, params, "head.fn." + std::to_string(n + 1)));
    hv.f = register_net(tape, params, "head.f");
    for (std::size_t n = 0; n < cfg.n_vars; ++n)
        hv.phi.push_back(register_net(tape, params, "head.phi." + std::to_string(n + 1)));
    return hv;
}

HeadNodes head_forward_node(Tape& tape, const HeadConfig& cfg, const HeadVars& hv,
                            std::span<const Var> hidden, const double* y) {
    if (hidden.empty()) throw ArgumentError("head_forward: empty hidden sequence");
    const std::size_t N = cfg.n_vars;

    HeadNodes out;
    out.alpha.reserve(N);
    out.g.reserve(N);
    Var sigma_min = tape.scalar(cfg.sigma_min);
    std::vector<Var> prior_scores, mus, sigmas;
    prior_scores.reserve(N);
    mus.reserve(N);
    sigmas.reserve(N);

    std::span<const Var> attended = hidden.first(attention_length(hidden.size()));
    for (std::size_t n = 0; n < N; ++n) {
        Var hseq = tape.stack_rows(attended, n);  // [attention_length(T) x d]
        Var s1 = tape.tanh(tape.add_row(tape.matmul_bt(hseq, hv.fn[n].w1), hv.fn[n].b1));
        Var scores = tape.add_scalar(tape.matvec(s1, hv.fn[n].w2), hv.fn[n].b2);
        Var alpha = tape.softmax(scores);
        Var g = tape.vecmat(alpha, hseq);  // [d]
        out.alpha.push_back(alpha);
        out.g.push_back(g);

        std::array<Var, 2> joint_parts{tape.row(hidden.back(), n), g};
        Var joint = tape.concat_n(joint_parts);  // h_T^n (+) g^n, [2d]

        prior_scores.push_back(scalar_net_node(tape, hv.f, joint));

        Var phi_hidden = tape.tanh(tape.add(tape.matvec(hv.phi[n].w1, joint), hv.phi[n].b1));
        Var phi_out = tape.add(tape.matvec(hv.phi[n].w2, phi_hidden), hv.phi[n].b2);  // [2]
        mus.push_back(tape.slice(phi_out, 0, 1));
        sigmas.push_back(tape.add_scalar(tape.softplus(tape.slice(phi_out, 1, 1)), sigma_min));
    }

    out.prior = tape.softmax(tape.concat_n(prior_scores));
    out.mu = tape.concat_n(mus);
    out.sigma = tape.concat_n(sigmas);

    if (y) {
        out.has_y = true;
        Var y_vec = tape.constant(NdArray::full({N}, *y));
        Var diff = tape.sub(y_vec, out.mu);
        Var quad = tape.div(tape.mul(diff, diff),
                            tape.scale(tape.mul(out.sigma, out.sigma), tape.scalar(2.0)));
        Var base = tape.constant(NdArray::full({N}, -kHalfLog2Pi));
        out.log_component = tape.sub(tape.sub(base, tape.log(out.sigma)), quad);
        out.log_prior = tape.log(out.prior);
        out.log_lik = tape.logsumexp(tape.add(out.log_prior, out.log_component));
    }
    return out;
}

MixtureOutput forward_head(const HeadConfig& cfg, const Parameters& params,
                           std::span<const NdArray> hidden, std::optional<double> y) {
    if (hidden.empty()) throw ArgumentError("forward_head: empty hidden sequence");
    Tape& tape = scratch_tape();
    HeadVars hv = register_head(tape, cfg, params);
    std::vector<Var> hs;
    hs.reserve(hidden.size());
    for (const NdArray& h : hidden) hs.push_back(tape.constant(h));
    double yv = y.value_or(0.0);
    HeadNodes nodes = head_forward_node(tape, cfg, hv, hs, y ? &yv : nullptr);

    const std::size_t N = cfg.n_vars, d = cfg.per_var_dim;
    const std::size_t A = attention_length(hidden.size());
    MixtureOutput out;
    out.alpha = NdArray::zeros({N, A});
    out.g = NdArray::zeros({N, d});
    for (std::size_t n = 0; n < N; ++n) {
        const NdArray& a = tape.val(nodes.alpha[n]);
        const NdArray& g = tape.val(nodes.g[n]);
        for (std::size_t t = 0; t < A; ++t) out.alpha.at2(n, t) = a.data[t];
        for (std::size_t j = 0; j < d; ++j) out.g.at2(n, j) = g.data[j];
    }
    out.prior = tape.val(nodes.prior);
    out.mu = tape.val(nodes.mu);
    out.sigma = tape.val(nodes.sigma);
    if (nodes.has_y) out.log_lik = tape.val0(nodes.log_lik);
    return out;
}

TemporalAttention temporal_attention(const HeadConfig& cfg, const Parameters& params,
                                     std::size_t var, std::span<const NdArray> hs_n) {
    if (hs_n.empty()) throw ArgumentError("temporal_attention: empty hidden sequence");
    (void)cfg;
    Tape& tape = scratch_tape();
    HeadVars::Net net = register_net(tape, params, "head.fn." + std::to_string(var + 1));
    std::vector<Var> scores;
    scores.reserve(hs_n.size());
    for (const NdArray& h : hs_n)
        scores.push_back(scalar_net_node(tape, net, tape.constant(h)));
    Var alpha = tape.softmax(tape.concat_n(scores));
    // g = sum_t alpha_t h_t
    const NdArray& av = tape.val(alpha);
    NdArray g = NdArray::zeros({hs_n[0].numel()});
    for (std::size_t t = 0; t < hs_n.size(); ++t)
        for (std::size_t j = 0; j < g.numel(); ++j) g.data[j] += av.data[t] * hs_n[t].data[j];
    return {tape.val(alpha), std::move(g)};
}

NdArray variable_prior(const HeadConfig& cfg, const Parameters& params,
                       std::span<const NdArray> joints) {
    if (joints.empty()) throw ArgumentError("variable_prior: no joint vectors");
    (void)cfg;
    Tape& tape = scratch_tape();
    HeadVars::Net net = register_net(tape, params, "head.f");
    std::vector<Var> scores;
    scores.reserve(joints.size());
    for (const NdArray& j : joints) scores.push_back(scalar_net_node(tape, net, tape.constant(j)));
    return tape.val(tape.softmax(tape.concat_n(scores)));
}

double log_normal_pdf(double y, double mu, double sigma) {
    const double z = (y - mu) / sigma;
    return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

double component_density(double y, double mu, double sigma, double sigma_min) {
    if (!(sigma >= sigma_min) || !(sigma_min > 0.0))
        throw ContractError("component_density: sigma " + std::to_string(sigma) +
                            " below floor " + std::to_string(sigma_min));
    return log_normal_pdf(y, mu, sigma);
}

double mixture_log_likelihood(double y, const NdArray& prior, const NdArray& mu,
                              const NdArray& sigma) {
    const std::size_t n = prior.numel();
    if (mu.numel() != n || sigma.numel() != n)
        throw DimensionError("mixture_log_likelihood: component count mismatch");
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (y - mu.data[i]) / sigma.data[i];
        terms[i] = std::log(prior.data[i]) - kHalfLog2Pi - std::log(sigma.data[i]) - 0.5 * z * z;
    }
    return log_sum_exp(terms.data(), n);
}

double predict(const NdArray& prior, const NdArray& mu) {
    if (prior.numel() != mu.numel())
        throw DimensionError("predict: prior and mu lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < prior.numel(); ++i) acc += prior.data[i] * mu.data[i];
    return acc;
}

}  // namespace imv
