#include "imv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "imv/dataio.hpp"
#include "imv/errors.hpp"
#include "imv/evalx.hpp"
#include "imv/toml.hpp"
#include "imv/trainer.hpp"

namespace imv {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
    std::string config_path;
    std::string data_csv;
    std::string target = "y";
    std::size_t window = 10;
    std::vector<double> split = {0.7, 0.1, 0.2};
    std::string variant = "tensor";
    std::size_t per_var_dim = 8;
    std::size_t head_width = 0;
    double sigma_min = kSigmaMinDefault;
    TrainConfig train;
    std::size_t snapshot_every = 5;
    std::string out_dir = ".";
};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// TOML file -> config; CLI flags are applied on top by CLI11 afterwards
void apply_toml(RunConfig& rc, const TomlTable& t) {
    auto str = [&](const char* key, std::string& dst) {
        auto it = t.find(key);
        if (it == t.end()) return;
        if (it->second.kind != TomlValue::Kind::String)
            throw ConfigError(std::string("config key '") + key + "' must be a string");
        dst = it->second.str;
    };
    auto num = [&](const char* key, auto& dst) {
        auto it = t.find(key);
        if (it == t.end()) return;
        if (it->second.kind != TomlValue::Kind::Number)
            throw ConfigError(std::string("config key '") + key + "' must be a number");
        dst = static_cast<std::decay_t<decltype(dst)>>(it->second.num);
    };
    auto boolean = [&](const char* key, bool& dst) {
        auto it = t.find(key);
        if (it == t.end()) return;
        if (it->second.kind != TomlValue::Kind::Boolean)
            throw ConfigError(std::string("config key '") + key + "' must be a boolean");
        dst = it->second.boolean;
    };
    for (const auto& [key, value] : t) {
        static const char* known[] = {
            "data.csv",        "data.target",        "data.window",     "data.split",
            "model.variant",   "model.per_var_dim",  "model.head_width", "model.sigma_min",
            "train.learning_rate", "train.batch_size", "train.epochs",  "train.l2",
            "train.grad_clip", "train.seed",         "train.snapshot_every", "train.parallel"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError("unknown config key '" + key + "'");
        (void)value;
    }
    str("data.csv", rc.data_csv);
    str("data.target", rc.target);
    num("data.window", rc.window);
    if (auto it = t.find("data.split"); it != t.end()) {
        if (it->second.kind != TomlValue::Kind::NumberArray)
            throw ConfigError("config key 'data.split' must be an array of numbers");
        rc.split = it->second.array;
    }
    str("model.variant", rc.variant);
    num("model.per_var_dim", rc.per_var_dim);
    num("model.head_width", rc.head_width);
    num("model.sigma_min", rc.sigma_min);
    num("train.learning_rate", rc.train.learning_rate);
    num("train.batch_size", rc.train.batch_size);
    num("train.epochs", rc.train.epochs);
    num("train.l2", rc.train.l2_coeff);
    num("train.grad_clip", rc.train.grad_clip_norm);
    num("train.seed", rc.train.seed);
    num("train.snapshot_every", rc.snapshot_every);
    boolean("train.parallel", rc.train.parallel);
}

// all problems reported together
void validate_run_config(const RunConfig& rc, bool need_data) {
    std::vector<std::string> problems;
    if (need_data && rc.data_csv.empty()) problems.push_back("no input CSV (--data or data.csv)");
    if (rc.variant != "full" && rc.variant != "tensor")
        problems.push_back("variant must be 'full' or 'tensor', got '" + rc.variant + "'");
    if (rc.window < 1) problems.push_back("window must be >= 1");
    if (rc.per_var_dim < 1) problems.push_back("per-var-dim must be >= 1");
    if (rc.split.size() != 3)
        problems.push_back("split must have three fractions (train, val, test)");
    else {
        double sum = rc.split[0] + rc.split[1] + rc.split[2];
        if (rc.split[0] <= 0.0 || rc.split[1] < 0.0 || rc.split[2] < 0.0 ||
            std::abs(sum - 1.0) > 1e-9)
            problems.push_back("split fractions must be non-negative, train > 0, sum to 1");
    }
    if (rc.snapshot_every < 1) problems.push_back("snapshot-every must be >= 1");
    try {
        rc.train.validate();
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    if (!problems.empty()) {
        std::string all = "invalid configuration:";
        for (const std::string& p : problems) all += "\n  - " + p;
        throw ConfigError(all);
    }
}

ModelConfig model_config_of(const RunConfig& rc, std::size_t n_vars) {
    ModelConfig mc;
    mc.cell.n_vars = n_vars;
    mc.cell.per_var_dim = rc.per_var_dim;
    mc.cell.input_dim_per_var = 1;
    mc.cell.variant = rc.variant == "full" ? Variant::Full : Variant::Tensor;
    mc.head_width = rc.head_width;
    mc.sigma_min = rc.sigma_min;
    return mc;
}

json split_metrics_json(const SplitMetrics& m) {
    return json{{"rmse", m.rmse}, {"mae", m.mae}, {"n_test", m.n}};
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open '" + tmp + "'");
        out << text;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
    validate_run_config(rc, true);
    SeriesTable table = load_csv(rc.data_csv, rc.target);
    if (table.dropped_rows > 0)
        out << "dropped " << table.dropped_rows << " rows with missing values\n";
    for (const std::string& ig : table.ignored_columns)
        out << "ignoring non-numeric column '" << ig << "'\n";

    WindowedDataset ds =
        prepare_dataset(table, rc.window, {rc.split[0], rc.split[1], rc.split[2]});
    ModelConfig mc = model_config_of(rc, ds.n_vars);

    std::ostringstream history;
    history << "epoch";
    for (const std::string& c : ds.columns) history << ',' << c;
    history << '\n';
    auto snapshot = [&](std::size_t epoch, const ImportanceState& imp) {
        history << epoch;
        for (double v : imp.var_importance.data) history << ',' << fmt17(v);
        history << '\n';
    };

    FitObserver observer = [&](const EpochInfo& info) {
        out << "epoch " << info.epoch << "  loss " << fmt17(info.train_loss) << "  val_rmse "
            << fmt17(info.val_rmse) << "\n";
        if (info.epoch % rc.snapshot_every == 0 || info.epoch == rc.train.epochs)
            snapshot(info.epoch, *info.importance);
    };
    Checkpoint ck = fit(ds, mc, rc.train, observer);
    if (rc.train.epochs == 0) snapshot(0, ck.importance);

    fs::create_directories(rc.out_dir);
    const std::string ck_path = (fs::path(rc.out_dir) / "checkpoint.json").string();
    save_checkpoint(ck, ck_path);

    PreparedData data = PreparedData::build(ds);
    json metrics;
    metrics["train"] =
        split_metrics_json(eval_split(mc, ck.params, data, Split::Train, rc.train.parallel));
    metrics["val"] =
        split_metrics_json(eval_split(mc, ck.params, data, Split::Val, rc.train.parallel));
    metrics["test"] =
        split_metrics_json(eval_split(mc, ck.params, data, Split::Test, rc.train.parallel));
    const std::string metrics_path = (fs::path(rc.out_dir) / "metrics.json").string();
    write_text_atomic(metrics_path, metrics.dump(1) + "\n");

    const std::string hist_path = (fs::path(rc.out_dir) / "importance_history.csv").string();
    write_text_atomic(hist_path, history.str());

    out << "checkpoint: " << ck_path << "\n";
    out << "metrics: " << metrics_path << "\n";
    out << "importance history: " << hist_path << "\n";
    out << "best epoch " << ck.meta.epoch << "  val_rmse " << fmt17(ck.meta.val_rmse) << "\n";
    return 0;
}

// reorders CSV channels to the checkpoint's column order; throws on mismatch
SeriesTable align_columns(const SeriesTable& table, const std::vector<std::string>& want) {
    std::vector<std::string> missing, extra;
    std::vector<std::size_t> order;
    for (const std::string& name : want) {
        auto it = std::find(table.columns.begin(), table.columns.end(), name);
        if (it == table.columns.end())
            missing.push_back(name);
        else
            order.push_back(static_cast<std::size_t>(it - table.columns.begin()));
    }
    for (const std::string& name : table.columns)
        if (std::find(want.begin(), want.end(), name) == want.end()) extra.push_back(name);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "CSV columns do not match the checkpoint's variable set";
        if (!missing.empty()) {
            msg += "; missing:";
            for (const std::string& m : missing) msg += " " + m;
        }
        if (!extra.empty()) {
            msg += "; unexpected:";
            for (const std::string& e : extra) msg += " " + e;
        }
        throw ConfigError(msg);
    }
    SeriesTable out;
    out.columns = want;
    out.n_rows = table.rows();
    out.values.reserve(table.rows() * want.size());
    for (std::size_t r = 0; r < table.rows(); ++r)
        for (std::size_t c : order) out.values.push_back(table.at(r, c));
    return out;
}

int cmd_predict(const std::string& ck_path, const std::string& csv_path, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ck_path);
    SeriesTable raw = load_csv(csv_path, ck.columns.back());
    SeriesTable table = align_columns(raw, ck.columns);

    const std::size_t T = ck.window, N = table.cols();
    if (table.rows() < T)
        throw ArgumentError("predict: CSV has " + std::to_string(table.rows()) +
                            " usable rows, needs at least the window size " + std::to_string(T));

    // standardize with the checkpoint statistics, never the new data's
    for (std::size_t r = 0; r < table.rows(); ++r)
        for (std::size_t c = 0; c < N; ++c)
            table.at(r, c) = ck.standardization.to_std(table.at(r, c), c);

    ParamLayout layout = ParamLayout::build(ck.model, ck.params);
    Tape tape;
    std::vector<Var> pvars;
    const std::size_t ycol = N - 1;

    out << "window_start,y_true,y_hat\n";
    for (std::size_t start = 0; start + T <= table.rows(); ++start) {
        std::vector<NdArray> xs;
        xs.reserve(T);
        for (std::size_t t = 0; t < T; ++t) {
            NdArray x = NdArray::zeros({N, 1});
            for (std::size_t c = 0; c < N; ++c) x.data[c] = table.at(start + t, c);
            xs.push_back(std::move(x));
        }
        tape.reset();
        register_params_into(tape, ck.params, pvars);
        ModelGraph g = model_forward_node(tape, ck.model, layout, pvars, xs, nullptr);
        const NdArray& prior = tape.val(g.head.prior);
        const NdArray& mu = tape.val(g.head.mu);
        double yhat = 0.0;
        for (std::size_t k = 0; k < prior.numel(); ++k) yhat += prior.data[k] * mu.data[k];
        yhat = ck.standardization.to_orig(yhat, ycol);

        out << start << ',';
        if (start + T < table.rows())
            out << fmt17(ck.standardization.to_orig(table.at(start + T, ycol), ycol));
        out << ',' << fmt17(yhat) << '\n';
    }
    return 0;
}

int cmd_importance(const std::string& ck_path, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ck_path);
    json j;
    j["I"] = ck.importance.var_importance.data;
    json temporal = json::object();
    const NdArray& ti = ck.importance.temporal_importance;
    for (std::size_t n = 0; n < ti.shape[0]; ++n) {
        std::vector<double> row(ti.shape[1]);
        for (std::size_t t = 0; t < ti.shape[1]; ++t) row[t] = ti.at2(n, t);
        temporal[ck.columns.at(n)] = row;
    }
    j["T"] = temporal;
    j["ranking"] = rank_variables(ck.importance.var_importance);
    out << j.dump(1) << "\n";
    return 0;
}

int cmd_select(const std::string& ck_path, const std::string& csv_path, double fraction,
               const std::string& out_csv, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ck_path);
    SeriesTable raw = load_csv(csv_path, ck.columns.back());
    SeriesTable table = align_columns(raw, ck.columns);
    std::vector<int> ranking = rank_variables(ck.importance.var_importance);
    SeriesTable reduced = select_columns(table, ranking, fraction);
    write_csv(reduced, out_csv);
    out << "selected " << reduced.cols() - 1 << " of " << table.cols() - 1
        << " exogenous variables -> " << out_csv << "\n";
    return 0;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_csv, std::ostream& out) {
    SeriesTable table = generate_synthetic(spec);
    write_csv(table, out_csv);
    out << "wrote " << table.rows() << " rows x " << table.cols() << " columns -> " << out_csv
        << "\n";
    return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interpretable multi-variable LSTM forecasting"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string checkpoint_path;
    double fraction = 0.5;
    std::string out_csv;

    auto add_common = [&](CLI::App* sub, bool with_train_flags) {
        sub->add_option("--config", rc.config_path, "TOML config file");
        sub->add_option("--data", rc.data_csv, "input CSV");
        sub->add_option("--target", rc.target, "target column name");
        sub->add_option("--out", rc.out_dir, "output directory");
        if (with_train_flags) {
            sub->add_option("--variant", rc.variant, "cell variant: full or tensor");
            sub->add_option("--per-var-dim", rc.per_var_dim, "hidden units per variable (d)");
            sub->add_option("--head-width", rc.head_width, "head net width (0 = d)");
            sub->add_option("--sigma-min", rc.sigma_min, "sigma floor of the Gaussian heads");
            sub->add_option("--window", rc.window, "window size T");
            sub->add_option("--split", rc.split, "train/val/test fractions")->expected(3);
            sub->add_option("--epochs", rc.train.epochs, "training epochs");
            sub->add_option("--seed", rc.train.seed, "random seed");
            sub->add_option("--lr", rc.train.learning_rate, "Adam learning rate");
            sub->add_option("--batch-size", rc.train.batch_size, "mini-batch size");
            sub->add_option("--l2", rc.train.l2_coeff, "L2 coefficient");
            sub->add_option("--grad-clip", rc.train.grad_clip_norm,
                            "global gradient-norm clip (0 disables)");
            sub->add_option("--snapshot-every", rc.snapshot_every,
                            "importance snapshot period (epochs)");
            sub->add_flag_callback(
                "--serial", [&] { rc.train.parallel = false; },
                "disable OpenMP batch parallelism");
        }
    };

    CLI::App* train = app.add_subcommand("train", "train a model and write checkpoint/metrics");
    add_common(train, true);

    CLI::App* predict = app.add_subcommand("predict", "predict each window of a CSV");
    predict->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    predict->add_option("--data", rc.data_csv, "input CSV")->required();

    CLI::App* importance = app.add_subcommand("importance", "print the importance report");
    importance->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();

    CLI::App* select = app.add_subcommand(
        "select", "write a CSV reduced to the top-ranked variables plus the target");
    select->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    select->add_option("--data", rc.data_csv, "input CSV")->required();
    select->add_option("--fraction", fraction, "fraction of exogenous variables to keep");
    select->add_option("--out-csv", out_csv, "output CSV path");
    select->add_option("--out", rc.out_dir, "output directory");

    SyntheticSpec spec;
    std::vector<std::string> driver_strs;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark CSV");
    synth->add_option("--exo-vars", spec.n_exo, "number of exogenous variables");
    synth->add_option("--length", spec.length, "series length");
    synth->add_option("--seed", spec.seed, "generator seed");
    synth->add_option("--noise", spec.noise_std, "target noise std");
    synth->add_option("--ar-coeff", spec.ar_coeff, "AR(1) coefficient of the exogenous series");
    synth->add_option("--driver", driver_strs,
                      "driver as var:lag:coeff (repeatable; default 1:2:0.6 and 2:0:0.3)");
    synth->add_flag("--nonlinear", spec.nonlinear, "apply tanh to the driver sum");
    synth->add_option("--out-csv", out_csv, "output CSV path");
    synth->add_option("--out", rc.out_dir, "output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (!rc.config_path.empty()) {
            RunConfig from_file;
            apply_toml(from_file, load_toml(rc.config_path));
            // flags win over the file: re-apply any flag the user passed
            std::swap(rc, from_file);
            CLI::App* sub = app.get_subcommands().front();
            auto take_if = [&](const char* flag, auto& dst, auto& src) {
                if (sub->get_option_no_throw(flag) && sub->count(flag) > 0) dst = src;
            };
            take_if("--data", rc.data_csv, from_file.data_csv);
            take_if("--target", rc.target, from_file.target);
            take_if("--out", rc.out_dir, from_file.out_dir);
            take_if("--variant", rc.variant, from_file.variant);
            take_if("--per-var-dim", rc.per_var_dim, from_file.per_var_dim);
            take_if("--head-width", rc.head_width, from_file.head_width);
            take_if("--sigma-min", rc.sigma_min, from_file.sigma_min);
            take_if("--window", rc.window, from_file.window);
            take_if("--split", rc.split, from_file.split);
            take_if("--epochs", rc.train.epochs, from_file.train.epochs);
            take_if("--seed", rc.train.seed, from_file.train.seed);
            take_if("--lr", rc.train.learning_rate, from_file.train.learning_rate);
            take_if("--batch-size", rc.train.batch_size, from_file.train.batch_size);
            take_if("--l2", rc.train.l2_coeff, from_file.train.l2_coeff);
            take_if("--grad-clip", rc.train.grad_clip_norm, from_file.train.grad_clip_norm);
            take_if("--snapshot-every", rc.snapshot_every, from_file.snapshot_every);
            if (sub->get_option_no_throw("--serial") && sub->count("--serial") > 0)
                rc.train.parallel = false;
        }

        if (train->parsed()) return cmd_train(rc, out);
        if (predict->parsed()) return cmd_predict(checkpoint_path, rc.data_csv, out);
        if (importance->parsed()) return cmd_importance(checkpoint_path, out);
        if (select->parsed()) {
            if (out_csv.empty())
                out_csv = (fs::path(rc.out_dir) / "selected.csv").string();
            return cmd_select(checkpoint_path, rc.data_csv, fraction, out_csv, out);
        }
        if (synth->parsed()) {
            if (!driver_strs.empty()) {
                spec.drivers.clear();
                for (const std::string& s : driver_strs) {
                    Driver d;
                    if (std::sscanf(s.c_str(), "%zu:%zu:%lf", &d.var, &d.lag, &d.coeff) != 3)
                        throw ConfigError("driver '" + s + "' is not var:lag:coeff");
                    spec.drivers.push_back(d);
                }
            }
            if (out_csv.empty())
                out_csv = (fs::path(rc.out_dir) / "synthetic.csv").string();
            fs::create_directories(fs::path(out_csv).parent_path().empty()
                                       ? "."
                                       : fs::path(out_csv).parent_path().string());
            return cmd_synth(spec, out_csv, out);
        }
        err << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace imv
