#include "imv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "imv/errors.hpp"
#include "imv/evalx.hpp"

namespace imv {

namespace {

constexpr double kImportanceFloor = 1e-12;
constexpr std::size_t kGradChunk = 16;
constexpr std::size_t kEvalChunk = 64;

}  // namespace

void TrainConfig::validate() const {
    std::string problems;
    auto bad = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (l2_coeff < 0.0) bad("l2_coeff must be non-negative");
    if (grad_clip_norm < 0.0) bad("grad_clip_norm must be non-negative (0 disables)");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        bad("adam betas must lie in (0,1)");
    if (!(adam_eps > 0.0)) bad("adam_eps must be positive");
    if (!problems.empty()) throw ConfigError("TrainConfig: " + problems);
}

ImportanceState ImportanceState::uniform(std::size_t n_vars, std::size_t window) {
    const std::size_t A = attention_length(window);
    ImportanceState st;
    st.var_importance = NdArray::full({n_vars}, 1.0 / static_cast<double>(n_vars));
    st.temporal_importance = NdArray::full({n_vars, A}, 1.0 / static_cast<double>(A));
    return st;
}

NdArray posterior(const MixtureOutput& mix, double y) {
    const std::size_t n = mix.prior.numel();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i)
        logs[i] = std::log(mix.prior.data[i]) +
                  log_normal_pdf(y, mix.mu.data[i], mix.sigma.data[i]);
    const double lse = log_sum_exp(logs.data(), n);
    NdArray q = NdArray::zeros({n});
    for (std::size_t i = 0; i < n; ++i) q.data[i] = std::exp(logs[i] - lse);
    return q;
}

double instance_loss(const MixtureOutput& mix, double y, const NdArray& q, const NdArray& I) {
    const std::size_t n = mix.prior.numel();
    if (q.numel() != n || I.numel() != n)
        throw DimensionError("instance_loss: q and I must have one entry per component");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loss -= q.data[i] * log_normal_pdf(y, mix.mu.data[i], mix.sigma.data[i]);
        loss -= q.data[i] * std::log(mix.prior.data[i]);
        loss -= q.data[i] * std::log(std::max(I.data[i], kImportanceFloor));
    }
    return loss;
}

AdamState AdamState::init(const Parameters& params) {
    AdamState st;
    st.m.reserve(params.items.size());
    st.v.reserve(params.items.size());
    for (const auto& [name, p] : params.items) {
        st.m.push_back(NdArray::zeros(p.shape));
        st.v.push_back(NdArray::zeros(p.shape));
    }
    return st;
}

void adam_step(Parameters& params, GradVec& grads, const TrainConfig& cfg, AdamState& state) {
    const std::size_t K = params.items.size();
    if (grads.size() != K || state.m.size() != K)
        throw ContractError("adam_step: gradients must be keyed identically to parameters");
    if (cfg.l2_coeff != 0.0)
        for (std::size_t k = 0; k < K; ++k) {
            const NdArray& p = params.items[k].second;
            for (std::size_t i = 0; i < p.numel(); ++i)
                grads[k].data[i] += cfg.l2_coeff * p.data[i];
        }
    if (cfg.grad_clip_norm > 0.0) {
        double norm2 = 0.0;
        for (const NdArray& g : grads)
            for (double v : g.data) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip_norm) {
            const double s = cfg.grad_clip_norm / norm;
            for (NdArray& g : grads)
                for (double& v : g.data) v *= s;
        }
    }
    state.t += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < K; ++k) {
        NdArray& p = params.items[k].second;
        NdArray& m = state.m[k];
        NdArray& v = state.v[k];
        const NdArray& g = grads[k];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            p.data[i] -=
                cfg.learning_rate * (m.data[i] / c1) / (std::sqrt(v.data[i] / c2) + cfg.adam_eps);
        }
    }
}

PreparedData PreparedData::build(const WindowedDataset& ds) {
    PreparedData data;
    data.ds = &ds;
    data.xs.reserve(ds.size());
    for (const NdArray& w : ds.inputs) data.xs.push_back(window_to_inputs(w));
    return data;
}

namespace {

void zero_grads_like(const Parameters& params, GradVec& g) {
    g.resize(params.items.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k].reset_shape(params.items[k].second.shape);
        std::fill(g[k].data.begin(), g[k].data.end(), 0.0);
    }
}

struct ChunkAcc {
    GradVec grad;
    NdArray q_sum, alpha_sum;
    double loss_sum = 0.0;
    std::ptrdiff_t bad = -1;  // global position in idx
};

// forward + E-step + backward for idx positions [begin, end), accumulating
// into `acc` in order
void run_chunk(const ModelConfig& cfg, const ParamLayout& layout, const Parameters& params,
               const PreparedData& data, std::span<const std::size_t> idx, const NdArray& I,
               std::size_t begin, std::size_t end, ChunkAcc& acc) {
    thread_local Tape tape;
    thread_local std::vector<Var> pvars;
    const std::size_t N = cfg.cell.n_vars;
    const std::size_t A = attention_length(data.ds->window);
    zero_grads_like(params, acc.grad);
    acc.q_sum = NdArray::zeros({N});
    acc.alpha_sum = NdArray::zeros({N, A});
    acc.loss_sum = 0.0;
    acc.bad = -1;
    NdArray q = NdArray::zeros({N});

    for (std::size_t pos = begin; pos < end; ++pos) {
        const std::size_t w = idx[pos];
        const double y = data.ds->targets[w];
        tape.reset();
        register_params_into(tape, params, pvars);
        ModelGraph g = model_forward_node(tape, cfg, layout, pvars, data.xs[w], &y);

        const NdArray& lp = tape.val(g.head.log_prior);
        const NdArray& lc = tape.val(g.head.log_component);
        std::vector<double> logs(N);
        for (std::size_t n = 0; n < N; ++n) logs[n] = lp.data[n] + lc.data[n];
        const double lse = log_sum_exp(logs.data(), N);
        for (std::size_t n = 0; n < N; ++n) q.data[n] = std::exp(logs[n] - lse);

        Var qv = tape.constant(q);
        Var loss_opt =
            tape.neg(tape.add(tape.dot(qv, g.head.log_component), tape.dot(qv, g.head.log_prior)));
        double loss_full = tape.val0(loss_opt);
        for (std::size_t n = 0; n < N; ++n)
            loss_full -= q.data[n] * std::log(std::max(I.data[n], kImportanceFloor));
        if (!std::isfinite(loss_full)) {
            acc.bad = static_cast<std::ptrdiff_t>(pos);
            return;
        }
        tape.backward(loss_opt);

        for (std::size_t k = 0; k < pvars.size(); ++k) {
            const NdArray& gk = tape.grad(pvars[k]);
            for (std::size_t i = 0; i < gk.numel(); ++i) acc.grad[k].data[i] += gk.data[i];
        }
        for (std::size_t n = 0; n < N; ++n) {
            acc.q_sum.data[n] += q.data[n];
            const NdArray& a = tape.val(g.head.alpha[n]);
            for (std::size_t t = 0; t < A; ++t) acc.alpha_sum.at2(n, t) += a.data[t];
        }
        acc.loss_sum += loss_full;
    }
}

}  // namespace

BatchStats batch_gradients_serial(const ModelConfig& cfg, const ParamLayout& layout,
                                  const Parameters& params, const PreparedData& data,
                                  std::span<const std::size_t> idx, const NdArray& I) {
    BatchStats st;
    ChunkAcc acc;
    run_chunk(cfg, layout, params, data, idx, I, 0, idx.size(), acc);
    st.grad_sum = std::move(acc.grad);
    st.q_sum = std::move(acc.q_sum);
    st.alpha_sum = std::move(acc.alpha_sum);
    st.loss_sum = acc.loss_sum;
    st.count = idx.size();
    st.nonfinite_at = acc.bad;
    return st;
}

BatchStats batch_gradients_parallel(const ModelConfig& cfg, const ParamLayout& layout,
                                    const Parameters& params, const PreparedData& data,
                                    std::span<const std::size_t> idx, const NdArray& I,
                                    bool use_omp) {
    const std::size_t n = idx.size();
    const std::size_t nchunks = (n + kGradChunk - 1) / kGradChunk;
    std::vector<ChunkAcc> accs(nchunks);

    auto worker = [&](std::size_t c) {
        const std::size_t b = c * kGradChunk;
        const std::size_t e = std::min(n, b + kGradChunk);
        run_chunk(cfg, layout, params, data, idx, I, b, e, accs[c]);
    };
#ifdef _OPENMP
    if (use_omp) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long c = 0; c < static_cast<long>(nchunks); ++c)
            worker(static_cast<std::size_t>(c));
    } else
#else
    (void)use_omp;
#endif
    {
        for (std::size_t c = 0; c < nchunks; ++c) worker(c);
    }

    // combine in fixed chunk order so the result is thread-count independent
    BatchStats st;
    const std::size_t N = cfg.cell.n_vars;
    const std::size_t A = attention_length(data.ds->window);
    zero_grads_like(params, st.grad_sum);
    st.q_sum = NdArray::zeros({N});
    st.alpha_sum = NdArray::zeros({N, A});
    st.count = n;
    for (std::size_t c = 0; c < nchunks; ++c) {
        ChunkAcc& acc = accs[c];
        if (acc.bad >= 0 && st.nonfinite_at < 0) {
            st.nonfinite_at = acc.bad;
            return st;
        }
        for (std::size_t k = 0; k < st.grad_sum.size(); ++k)
            for (std::size_t i = 0; i < st.grad_sum[k].numel(); ++i)
                st.grad_sum[k].data[i] += acc.grad[k].data[i];
        for (std::size_t i = 0; i < N; ++i) st.q_sum.data[i] += acc.q_sum.data[i];
        for (std::size_t i = 0; i < N * A; ++i) st.alpha_sum.data[i] += acc.alpha_sum.data[i];
        st.loss_sum += acc.loss_sum;
    }
    return st;
}

double em_epoch(const ModelConfig& cfg, Parameters& params, const ParamLayout& layout,
                const PreparedData& data, const TrainConfig& tcfg, ImportanceState& importance,
                AdamState& adam, Rng& shuffle_rng) {
    tcfg.validate();
    std::vector<std::size_t> train_idx = data.ds->indices(Split::Train);
    if (train_idx.empty()) throw ArgumentError("em_epoch: training split is empty");
    shuffle_rng.shuffle(train_idx);

    const std::size_t N = cfg.cell.n_vars;
    const std::size_t A = attention_length(data.ds->window);
    const std::size_t M = train_idx.size();
    NdArray q_sum = NdArray::zeros({N});
    NdArray alpha_sum = NdArray::zeros({N, A});
    double loss_sum = 0.0;

    const std::size_t nbatches = (M + tcfg.batch_size - 1) / tcfg.batch_size;
    for (std::size_t b = 0; b < nbatches; ++b) {
        const std::size_t b0 = b * tcfg.batch_size;
        const std::size_t b1 = std::min(M, b0 + tcfg.batch_size);
        std::span<const std::size_t> idx(train_idx.data() + b0, b1 - b0);
        BatchStats st = batch_gradients_parallel(cfg, layout, params, data, idx,
                                                 importance.var_importance, tcfg.parallel);
        if (st.nonfinite_at >= 0)
            throw TrainError("em_epoch: non-finite loss in batch " + std::to_string(b) +
                             " (window " + std::to_string(idx[st.nonfinite_at]) + ")");
        GradVec grads = std::move(st.grad_sum);
        const double inv = 1.0 / static_cast<double>(st.count);
        for (NdArray& g : grads)
            for (double& v : g.data) v *= inv;
        adam_step(params, grads, tcfg, adam);

        for (std::size_t i = 0; i < N; ++i) q_sum.data[i] += st.q_sum.data[i];
        for (std::size_t i = 0; i < N * A; ++i) alpha_sum.data[i] += st.alpha_sum.data[i];
        loss_sum += st.loss_sum;
    }

    const double inv_m = 1.0 / static_cast<double>(M);
    for (std::size_t i = 0; i < N; ++i)
        importance.var_importance.data[i] = q_sum.data[i] * inv_m;
    importance.temporal_importance.reset_shape({N, A});
    for (std::size_t i = 0; i < N * A; ++i)
        importance.temporal_importance.data[i] = alpha_sum.data[i] * inv_m;
    return loss_sum * inv_m;
}

double em_epoch(const ModelConfig& cfg, Parameters& params, const WindowedDataset& ds,
                const TrainConfig& tcfg, ImportanceState& importance, AdamState& adam,
                Rng& shuffle_rng) {
    ParamLayout layout = ParamLayout::build(cfg, params);
    PreparedData data = PreparedData::build(ds);
    return em_epoch(cfg, params, layout, data, tcfg, importance, adam, shuffle_rng);
}

InstanceEval instance_backward(const ModelConfig& cfg, const Parameters& params,
                               std::span<const NdArray> xs, double y, const NdArray& I) {
    InstanceEval ev;
    ev.mix = model_forward(cfg, params, xs, y);
    ev.q = posterior(ev.mix, y);

    Tape tape;
    std::vector<Var> pvars = register_params(tape, params);
    ParamLayout layout = ParamLayout::build(cfg, params);
    ModelGraph g = model_forward_node(tape, cfg, layout, pvars, xs, &y);
    Var qv = tape.constant(ev.q);
    Var loss_opt =
        tape.neg(tape.add(tape.dot(qv, g.head.log_component), tape.dot(qv, g.head.log_prior)));
    ev.loss_optimized = tape.val0(loss_opt);
    ev.loss_full = instance_loss(ev.mix, y, ev.q, I);
    tape.backward(loss_opt);
    ev.grads.reserve(pvars.size());
    for (Var p : pvars) ev.grads.push_back(tape.grad(p));
    return ev;
}

double loss_given_q(const ModelConfig& cfg, const Parameters& params,
                    std::span<const NdArray> xs, double y, const NdArray& q) {
    MixtureOutput mix = model_forward(cfg, params, xs, y);
    double loss = 0.0;
    for (std::size_t n = 0; n < q.numel(); ++n) {
        loss -= q.data[n] * log_normal_pdf(y, mix.mu.data[n], mix.sigma.data[n]);
        loss -= q.data[n] * std::log(mix.prior.data[n]);
    }
    return loss;
}

std::vector<double> predict_windows(const ModelConfig& cfg, const Parameters& params,
                                    const PreparedData& data,
                                    std::span<const std::size_t> idx, bool parallel) {
    const std::size_t n = idx.size();
    std::vector<double> out(n, 0.0);
    const std::size_t ycol = cfg.cell.n_vars - 1;
    const Standardization& st = data.ds->standardization;
    ParamLayout layout = ParamLayout::build(cfg, params);

    auto worker = [&](std::size_t c) {
        thread_local Tape tape;
        thread_local std::vector<Var> pvars;
        const std::size_t b = c * kEvalChunk;
        const std::size_t e = std::min(n, b + kEvalChunk);
        for (std::size_t pos = b; pos < e; ++pos) {
            tape.reset();
            register_params_into(tape, params, pvars);
            ModelGraph g = model_forward_node(tape, cfg, layout, pvars, data.xs[idx[pos]], nullptr);
            double yhat = 0.0;
            const NdArray& prior = tape.val(g.head.prior);
            const NdArray& mu = tape.val(g.head.mu);
            for (std::size_t k = 0; k < prior.numel(); ++k) yhat += prior.data[k] * mu.data[k];
            out[pos] = st.to_orig(yhat, ycol);
        }
    };
    const std::size_t nchunks = (n + kEvalChunk - 1) / kEvalChunk;
#ifdef _OPENMP
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long c = 0; c < static_cast<long>(nchunks); ++c)
            worker(static_cast<std::size_t>(c));
    } else
#else
    (void)parallel;
#endif
    {
        for (std::size_t c = 0; c < nchunks; ++c) worker(c);
    }
    return out;
}

SplitMetrics eval_split(const ModelConfig& cfg, const Parameters& params,
                        const PreparedData& data, Split split, bool parallel) {
    std::vector<std::size_t> idx = data.ds->indices(split);
    SplitMetrics sm;
    sm.n = idx.size();
    if (idx.empty()) return sm;
    std::vector<double> yhat = predict_windows(cfg, params, data, idx, parallel);
    const std::size_t ycol = cfg.cell.n_vars - 1;
    std::vector<double> ytrue(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        ytrue[i] = data.ds->standardization.to_orig(data.ds->targets[idx[i]], ycol);
    sm.rmse = rmse(ytrue, yhat);
    sm.mae = mae(ytrue, yhat);
    return sm;
}

Checkpoint fit(const WindowedDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
               const FitObserver& observer) {
    tcfg.validate();
    if (ds.n_vars != mcfg.cell.n_vars)
        throw ConfigError("fit: dataset has " + std::to_string(ds.n_vars) +
                          " variables, model expects " + std::to_string(mcfg.cell.n_vars));
    Parameters params = init_model_params(mcfg, tcfg.seed);
    ParamLayout layout = ParamLayout::build(mcfg, params);
    PreparedData data = PreparedData::build(ds);
    ImportanceState importance = ImportanceState::uniform(mcfg.cell.n_vars, ds.window);
    AdamState adam = AdamState::init(params);
    Rng shuffle_rng(tcfg.seed ^ 0x9E3779B97F4A7C15ull);

    const Split metric_split = ds.count(Split::Val) > 0 ? Split::Val : Split::Train;
    auto metric = [&](const Parameters& p) {
        return eval_split(mcfg, p, data, metric_split, tcfg.parallel).rmse;
    };

    Checkpoint best;
    best.model = mcfg;
    best.window = ds.window;
    best.columns = ds.columns;
    best.params = params;
    best.importance = importance;
    best.standardization = ds.standardization;
    best.meta.seed = tcfg.seed;
    best.meta.epoch = 0;
    best.meta.val_rmse = metric(params);

    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const double mean_loss =
            em_epoch(mcfg, params, layout, data, tcfg, importance, adam, shuffle_rng);
        best.meta.loss_history.push_back(mean_loss);
        const double val = metric(params);
        if (observer) {
            EpochInfo info;
            info.epoch = epoch;
            info.train_loss = mean_loss;
            info.val_rmse = val;
            info.importance = &importance;
            observer(info);
        }
        if (val < best.meta.val_rmse) {
            best.params = params;
            best.importance = importance;
            best.meta.epoch = epoch;
            best.meta.val_rmse = val;
        }
    }
    return best;
}

// --- persistence ---

namespace {

using nlohmann::json;

json shape_to_json(const std::vector<std::size_t>& s) {
    json a = json::array();
    for (std::size_t e : s) a.push_back(e);
    return a;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    json j;
    j["format_version"] = 1;
    json cfg;
    cfg["n_vars"] = ck.model.cell.n_vars;
    cfg["per_var_dim"] = ck.model.cell.per_var_dim;
    cfg["input_dim_per_var"] = ck.model.cell.input_dim_per_var;
    cfg["variant"] = ck.model.cell.variant == Variant::Full ? "full" : "tensor";
    cfg["head_width"] = ck.model.head_width;
    cfg["sigma_min"] = ck.model.sigma_min;
    cfg["window"] = ck.window;
    cfg["columns"] = ck.columns;
    j["config"] = cfg;

    json params = json::object();
    for (const auto& [name, p] : ck.params.items)
        params[name] = json{{"shape", shape_to_json(p.shape)}, {"data", p.data}};
    j["params"] = params;

    json imp;
    imp["I"] = ck.importance.var_importance.data;
    json temporal = json::object();
    const NdArray& ti = ck.importance.temporal_importance;
    for (std::size_t n = 0; n < ti.shape[0]; ++n) {
        std::vector<double> row(ti.shape[1]);
        for (std::size_t t = 0; t < ti.shape[1]; ++t) row[t] = ti.at2(n, t);
        temporal[ck.columns.at(n)] = row;
    }
    imp["T"] = temporal;
    j["importance"] = imp;

    j["standardization"] =
        json{{"mean", ck.standardization.mean}, {"std", ck.standardization.stdev}};
    j["meta"] = json{{"seed", ck.meta.seed},
                     {"epoch", ck.meta.epoch},
                     {"val_rmse", ck.meta.val_rmse},
                     {"loss_history", ck.meta.loss_history}};

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("save_checkpoint: cannot open '" + tmp + "'");
        out << j.dump(1) << '\n';
        if (!out) throw IoError("save_checkpoint: write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("save_checkpoint: cannot rename '" + tmp + "' to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("load_checkpoint: '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw ParseError("load_checkpoint: '" + path + "' has no format_version");
    if (j["format_version"].get<int>() != 1)
        throw ParseError("load_checkpoint: '" + path + "' has format_version " +
                         j["format_version"].dump() + ", this build reads version 1");

    Checkpoint ck;
    try {
        const json& cfg = j.at("config");
        ck.model.cell.n_vars = cfg.at("n_vars").get<std::size_t>();
        ck.model.cell.per_var_dim = cfg.at("per_var_dim").get<std::size_t>();
        ck.model.cell.input_dim_per_var = cfg.at("input_dim_per_var").get<std::size_t>();
        const std::string variant = cfg.at("variant").get<std::string>();
        if (variant == "full")
            ck.model.cell.variant = Variant::Full;
        else if (variant == "tensor")
            ck.model.cell.variant = Variant::Tensor;
        else
            throw ParseError("unknown variant '" + variant + "'");
        ck.model.head_width = cfg.at("head_width").get<std::size_t>();
        ck.model.sigma_min = cfg.at("sigma_min").get<double>();
        ck.window = cfg.at("window").get<std::size_t>();
        ck.columns = cfg.at("columns").get<std::vector<std::string>>();

        const json& params = j.at("params");
        for (const std::string& name : canonical_param_names(ck.model)) {
            if (!params.contains(name))
                throw ParseError("missing parameter tensor '" + name + "'");
            const json& pj = params.at(name);
            auto shape = pj.at("shape").get<std::vector<std::size_t>>();
            auto data = pj.at("data").get<std::vector<double>>();
            ck.params.add(name, NdArray(std::move(shape), std::move(data)));
        }

        const json& imp = j.at("importance");
        ck.importance.var_importance = NdArray::vector(imp.at("I").get<std::vector<double>>());
        const json& temporal = imp.at("T");
        const std::size_t N = ck.model.cell.n_vars;
        const std::size_t A = attention_length(ck.window);
        ck.importance.temporal_importance = NdArray::zeros({N, A});
        for (std::size_t n = 0; n < N; ++n) {
            auto row = temporal.at(ck.columns.at(n)).get<std::vector<double>>();
            if (row.size() != A) throw ParseError("temporal importance row length mismatch");
            for (std::size_t t = 0; t < A; ++t) ck.importance.temporal_importance.at2(n, t) = row[t];
        }

        ck.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
        ck.standardization.stdev = j.at("standardization").at("std").get<std::vector<double>>();

        const json& meta = j.at("meta");
        ck.meta.seed = meta.at("seed").get<std::uint64_t>();
        ck.meta.epoch = meta.at("epoch").get<std::size_t>();
        ck.meta.val_rmse = meta.at("val_rmse").get<double>();
        ck.meta.loss_history = meta.at("loss_history").get<std::vector<double>>();
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("load_checkpoint: '" + path + "' is malformed: " + e.what());
    }
    return ck;
}

}  // namespace imv
