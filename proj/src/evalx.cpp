#include "imv/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "json.hpp"

#include "imv/errors.hpp"
#include "imv/rng.hpp"

namespace imv {

double rmse(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw ArgumentError("rmse: need equal-length non-empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw ArgumentError("mae: need equal-length non-empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]);
    return acc / static_cast<double>(y.size());
}

std::vector<int> rank_variables(const NdArray& importance) {
    const std::size_t n = importance.numel();
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i) + 1;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return importance.data[a - 1] > importance.data[b - 1];
    });
    return order;
}

std::vector<int> pearson_rank(const SeriesTable& table, std::size_t train_rows) {
    const std::size_t L = std::min(train_rows, table.rows());
    if (L < 2) throw ArgumentError("pearson_rank: need at least 2 rows");
    const std::size_t N = table.cols();
    const std::size_t ycol = N - 1;
    const std::size_t K = L - 1;  // pairs (x_t, y_{t+1})

    std::vector<double> rho(N - 1, 0.0);
    for (std::size_t c = 0; c + 1 < N; ++c) {
        double mx = 0.0, my = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
            mx += table.at(t, c);
            my += table.at(t + 1, ycol);
        }
        mx /= static_cast<double>(K);
        my /= static_cast<double>(K);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
            const double dx = table.at(t, c) - mx;
            const double dy = table.at(t + 1, ycol) - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        rho[c] = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    }

    std::vector<int> order(N - 1);
    for (std::size_t i = 0; i + 1 < N; ++i) order[i] = static_cast<int>(i) + 1;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(rho[a - 1]) > std::abs(rho[b - 1]); });
    return order;
}

std::vector<std::size_t> selected_channels(std::size_t n_vars, std::span<const int> ranking,
                                           double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ArgumentError("selection fraction must lie in (0, 1]");
    const std::size_t n_exo = n_vars - 1;
    const auto keep =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_exo)));
    std::vector<bool> kept(n_vars, false);
    std::size_t taken = 0;
    for (int r : ranking) {
        if (taken == keep) break;
        const auto ch = static_cast<std::size_t>(r - 1);
        if (ch >= n_exo) continue;  // skip the target channel in mixed rankings
        if (!kept[ch]) {
            kept[ch] = true;
            ++taken;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < n_exo; ++c)
        if (kept[c]) out.push_back(c);
    out.push_back(n_vars - 1);  // target always kept, stays last
    return out;
}

WindowedDataset select_top_k(const WindowedDataset& ds, std::span<const int> ranking,
                             double fraction) {
    std::vector<std::size_t> chans = selected_channels(ds.n_vars, ranking, fraction);
    WindowedDataset out;
    out.window = ds.window;
    out.n_vars = chans.size();
    out.targets = ds.targets;
    out.split = ds.split;
    out.start = ds.start;
    const bool has_stats = ds.standardization.mean.size() == ds.n_vars;
    for (std::size_t c : chans) {
        out.columns.push_back(ds.columns[c]);
        if (has_stats) {
            out.standardization.mean.push_back(ds.standardization.mean[c]);
            out.standardization.stdev.push_back(ds.standardization.stdev[c]);
        }
    }
    out.inputs.reserve(ds.inputs.size());
    for (const NdArray& w : ds.inputs) {
        NdArray r = NdArray::zeros({ds.window, chans.size()});
        for (std::size_t t = 0; t < ds.window; ++t)
            for (std::size_t k = 0; k < chans.size(); ++k) r.at2(t, k) = w.at2(t, chans[k]);
        out.inputs.push_back(std::move(r));
    }
    return out;
}

SeriesTable select_columns(const SeriesTable& table, std::span<const int> ranking,
                           double fraction) {
    std::vector<std::size_t> chans = selected_channels(table.cols(), ranking, fraction);
    SeriesTable out;
    out.n_rows = table.rows();
    for (std::size_t c : chans) out.columns.push_back(table.columns[c]);
    out.values.reserve(out.n_rows * chans.size());
    for (std::size_t r = 0; r < table.rows(); ++r)
        for (std::size_t c : chans) out.values.push_back(table.at(r, c));
    return out;
}

SyntheticSpec default_benchmark() { return SyntheticSpec{}; }

namespace {

// exogenous paths plus the noiseless target component; shared by the
// generator and the Bayes oracle so both see identical randomness
struct SyntheticPaths {
    std::vector<std::vector<double>> exo;  // [n_exo][burn + length]
    std::vector<double> signal;            // s(t), t in [0, length)
    std::size_t burn = 0;
};

SyntheticPaths synthetic_paths(const SyntheticSpec& spec) {
    std::size_t maxlag = 0;
    for (const Driver& d : spec.drivers) {
        if (d.var < 1 || d.var > spec.n_exo)
            throw ArgumentError("generate_synthetic: driver variable " + std::to_string(d.var) +
                                " out of range 1.." + std::to_string(spec.n_exo));
        maxlag = std::max(maxlag, d.lag);
    }
    if (spec.noise_std < 0.0) throw ArgumentError("generate_synthetic: noise_std must be >= 0");

    SyntheticPaths p;
    p.burn = maxlag + 1;
    Rng rng(spec.seed);
    const double phi = spec.ar_coeff;
    const double stat_sd = 1.0 / std::sqrt(1.0 - phi * phi);
    p.exo.assign(spec.n_exo, std::vector<double>(p.burn + spec.length, 0.0));
    for (std::size_t n = 0; n < spec.n_exo; ++n) {
        std::vector<double>& v = p.exo[n];
        v[0] = rng.normal() * stat_sd;
        for (std::size_t t = 1; t < v.size(); ++t) v[t] = phi * v[t - 1] + rng.normal();
    }
    // y(t) = s(t-1 driver sum) + noise; with the burn-in, s is defined for all t
    p.signal.resize(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        double s = 0.0;
        for (const Driver& d : spec.drivers) {
            // v at generator time (t-1) - lag, offset by burn
            const std::size_t pos = p.burn + t - 1 - d.lag;
            s += d.coeff * p.exo[d.var - 1][pos];
        }
        p.signal[t] = spec.nonlinear ? std::tanh(s) : s;
    }
    return p;
}

}  // namespace

SeriesTable generate_synthetic(const SyntheticSpec& spec) {
    SyntheticPaths p = synthetic_paths(spec);
    // separate noise stream so the Bayes oracle can rebuild the paths alone
    Rng rng(spec.seed ^ 0x6A09E667F3BCC909ull);
    SeriesTable table;
    for (std::size_t n = 0; n < spec.n_exo; ++n)
        table.columns.push_back("v" + std::to_string(n + 1));
    table.columns.push_back("y");
    table.n_rows = spec.length;
    table.values.reserve(spec.length * (spec.n_exo + 1));
    for (std::size_t t = 0; t < spec.length; ++t) {
        for (std::size_t n = 0; n < spec.n_exo; ++n)
            table.values.push_back(p.exo[n][p.burn + t]);
        table.values.push_back(p.signal[t] + spec.noise_std * rng.normal());
    }
    return table;
}

std::vector<double> synthetic_true_signal(const SyntheticSpec& spec) {
    return synthetic_paths(spec).signal;
}

std::uint64_t table_hash(const SeriesTable& table) {
    std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
    auto mix_byte = [&](unsigned char b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (const std::string& name : table.columns) {
        for (char c : name) mix_byte(static_cast<unsigned char>(c));
        mix_byte(0);
    }
    for (double v : table.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(bits >> (8 * i)));
    }
    return h;
}

std::string metrics_report(std::span<const double> y, std::span<const double> yhat) {
    nlohmann::json j;
    j["rmse"] = rmse(y, yhat);
    j["mae"] = mae(y, yhat);
    j["n_test"] = y.size();
    return j.dump();
}

}  // namespace imv
