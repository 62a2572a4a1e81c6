#ifndef IMV_MIXTURE_HPP
#define IMV_MIXTURE_HPP

#include <optional>
#include <span>
#include <vector>

#include "imv/ndarray.hpp"
#include "imv/params.hpp"
#include "imv/rng.hpp"
#include "imv/tape.hpp"

namespace imv {

inline constexpr double kSigmaMinDefault = 1e-3;

/// Temporal attention summarizes the history h_1..h_{T-1}; the final state
/// h_T enters the heads directly as part of h_T (+) g^n. A single-step
/// sequence is attended as-is.
inline std::size_t attention_length(std::size_t window) {
    return window > 1 ? window - 1 : 1;
}

/// Geometry of the mixture-attention head. Each of the N variables gets a
/// scoring net f_n and an output net phi_n; one prior net f is shared.
/// All are one-hidden-layer tanh nets of the given width (default: d).
struct HeadConfig {
    std::size_t n_vars = 1;
    std::size_t per_var_dim = 1;
    std::size_t width = 0;  // 0 -> per_var_dim
    double sigma_min = kSigmaMinDefault;

    std::size_t w() const { return width ? width : per_var_dim; }
};

/// Adds the head tensors under their canonical names:
///   head.fn.{n}.w1|b1|w2|b2   scoring net of variable n (1-based)
///   head.f.w1|b1|w2|b2        shared prior net over h_T^n (+) g^n
///   head.phi.{n}.w1|b1|w2|b2  output net of variable n -> (mu, raw sigma)
void init_head_params(const HeadConfig& cfg, Rng& rng, double weight_scale, Parameters& out);

struct HeadVars {
    struct Net {
        Var w1, b1, w2, b2;
    };
    std::vector<Net> fn, phi;
    Net f;
};

HeadVars register_head(Tape& tape, const HeadConfig& cfg, const Parameters& params);

/// Tape handles produced by one head forward pass.
struct HeadNodes {
    std::vector<Var> alpha;  // per variable, [attention_length(T)]
    std::vector<Var> g;      // per variable, [d]
    Var prior;               // [N]
    Var mu;                  // [N]
    Var sigma;               // [N], softplus(raw) + sigma_min
    Var log_component;       // [N] log N(y; mu_n, sigma_n^2), only if y given
    Var log_prior;           // [N], only if y given
    Var log_lik;             // [1], only if y given
    bool has_y = false;
};

/// Builds temporal attention per variable, the variable prior, the Gaussian
/// component parameters and (when y is provided) the mixture log-likelihood.
HeadNodes head_forward_node(Tape& tape, const HeadConfig& cfg, const HeadVars& hv,
                            std::span<const Var> hidden, const double* y);

/// Everything the head produces for one instance.
struct MixtureOutput {
    NdArray alpha;  // [N x attention_length(T)], rows sum to 1
    NdArray g;      // [N x d]
    NdArray prior;  // [N], sums to 1
    NdArray mu;     // [N]
    NdArray sigma;  // [N], >= sigma_min
    std::optional<double> log_lik;
};

MixtureOutput forward_head(const HeadConfig& cfg, const Parameters& params,
                           std::span<const NdArray> hidden, std::optional<double> y);

// --- standalone value-level operations ---

struct TemporalAttention {
    NdArray alpha;  // [T]
    NdArray g;      // [d]
};

/// Attention of variable `var` (0-based) over its hidden sequence.
TemporalAttention temporal_attention(const HeadConfig& cfg, const Parameters& params,
                                     std::size_t var, std::span<const NdArray> hs_n);

/// Softmax over the shared net's scores of the N joint vectors h_T^n (+) g^n.
NdArray variable_prior(const HeadConfig& cfg, const Parameters& params,
                       std::span<const NdArray> joints);

/// log N(y; mu, sigma^2), no contract check.
double log_normal_pdf(double y, double mu, double sigma);

/// log N(y; mu, sigma^2). sigma must respect the floor.
double component_density(double y, double mu, double sigma,
                         double sigma_min = kSigmaMinDefault);

/// log sum_n prior_n N(y; mu_n, sigma_n^2), evaluated in log space.
double mixture_log_likelihood(double y, const NdArray& prior, const NdArray& mu,
                              const NdArray& sigma);

/// Point prediction: the prior-weighted sum of component means.
double predict(const NdArray& prior, const NdArray& mu);

}  // namespace imv

#endif  // IMV_MIXTURE_HPP
