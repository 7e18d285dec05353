#include "ffreg/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ffreg/baseline.hpp"
#include "ffreg/benchmarks.hpp"
#include "ffreg/csv_io.hpp"
#include "ffreg/inference.hpp"
#include "ffreg/network.hpp"
#include "ffreg/trainer.hpp"

#ifndef FFREG_VERSION
#define FFREG_VERSION "unknown"
#endif

namespace ffreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using bench::BenchmarkPreset;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run manifest: written as "partial" when a command starts and rewritten
/// atomically when it ends.
class Manifest {
public:
    Manifest(fs::path path, std::string command, const std::vector<std::string>& args)
        : path_(std::move(path)) {
        doc_["command"] = std::move(command);
        doc_["args"] = args;
        doc_["code_version"] = FFREG_VERSION;
        doc_["started_at"] = utc_now();
        doc_["finished_at"] = nullptr;
        doc_["status"] = "partial";
        doc_["outputs"] = json::array();
        doc_["config"] = json::object();
        write();
    }

    void set_config(const json& config, std::uint64_t seed) {
        doc_["config"] = config;
        doc_["seed"] = seed;
        write();
    }
    void add_output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }

    void finish(const std::string& status) {
        doc_["status"] = status;
        doc_["finished_at"] = utc_now();
        write();
    }

private:
    void write() const { write_file_atomic(path_, doc_.dump(2) + "\n"); }

    fs::path path_;
    json doc_;
};

// ---------------------------------------------------------------------------
// Configuration

json preset_to_json(const BenchmarkPreset& p) {
    const TrainConfig& t = p.train;
    json j;
    j["tol"] = t.tol;
    j["y_min"] = t.y_min;
    j["y_max"] = t.y_max;
    j["n_in_tol"] = t.n_in_tol;
    j["n_out_tol"] = t.n_out_tol;
    j["n_epochs"] = t.n_epochs;
    j["optimizer"] = t.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
    j["learning_rate"] = t.optimizer.learning_rate;
    j["beta1"] = t.optimizer.beta1;
    j["beta2"] = t.optimizer.beta2;
    j["epsilon"] = t.optimizer.epsilon;
    j["loss_scale"] = t.loss_scale.theta();
    j["seed"] = t.seed;
    j["minibatch_size"] = t.minibatch_size;
    j["layer_sizes"] = p.layer_sizes;
    j["n_trials"] = p.n_trials;
    j["selection_mode"] = to_string(p.selection);
    j["samples_per_axis"] = p.samples_per_axis;
    j["eval_points"] = p.eval_points;
    return j;
}

struct AppliedConfig {
    bool y_min = false;
    bool y_max = false;
};

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

int get_count(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw UsageError("config key '" + key + "' must be an integer");
    return v.get<int>();
}

AppliedConfig apply_config(const json& cfg, BenchmarkPreset& p) {
    if (!cfg.is_object()) throw UsageError("config must be a flat JSON object");
    AppliedConfig applied;
    TrainConfig& t = p.train;
    for (const auto& [key, v] : cfg.items()) {
        if (key == "tol") t.tol = get_as<double>(v, key);
        else if (key == "y_min") { t.y_min = get_as<double>(v, key); applied.y_min = true; }
        else if (key == "y_max") { t.y_max = get_as<double>(v, key); applied.y_max = true; }
        else if (key == "y_padding") {
            bench::pad_y_range(p, get_as<double>(v, key));
            applied.y_min = applied.y_max = true;
        }
        else if (key == "n_in_tol") t.n_in_tol = get_count(v, key);
        else if (key == "n_out_tol") t.n_out_tol = get_count(v, key);
        else if (key == "n_epochs") t.n_epochs = get_count(v, key);
        else if (key == "learning_rate") t.optimizer.learning_rate = get_as<double>(v, key);
        else if (key == "beta1") t.optimizer.beta1 = get_as<double>(v, key);
        else if (key == "beta2") t.optimizer.beta2 = get_as<double>(v, key);
        else if (key == "epsilon") t.optimizer.epsilon = get_as<double>(v, key);
        else if (key == "optimizer") {
            const auto name = get_as<std::string>(v, key);
            if (name == "adam") t.optimizer.kind = OptimizerKind::Adam;
            else if (name == "sgd") t.optimizer.kind = OptimizerKind::Sgd;
            else throw UsageError("config key 'optimizer' must be \"adam\" or \"sgd\"");
        }
        else if (key == "loss_scale") {
            try {
                t.loss_scale = LossScale(get_as<double>(v, key));
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("config key 'loss_scale': ") + e.what());
            }
        }
        else if (key == "seed") t.seed = get_as<std::uint64_t>(v, key);
        else if (key == "minibatch_size") t.minibatch_size = get_count(v, key);
        else if (key == "layer_sizes") p.layer_sizes = get_as<std::vector<int>>(v, key);
        else if (key == "n_trials") p.n_trials = get_count(v, key);
        else if (key == "selection_mode") p.selection = parse_selection_mode(get_as<std::string>(v, key));
        else if (key == "samples_per_axis") p.samples_per_axis = get_count(v, key);
        else if (key == "eval_points") p.eval_points = get_count(v, key);
        else throw UsageError("unknown config key '" + key + "'");
    }
    return applied;
}

json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

/// Flags shared by the subcommands.
struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<std::string> selection_mode;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Flat JSON config (keys mirror the training/query settings)");
    cmd->add_option("--seed", f.seed, "Random seed (overrides config)");
    cmd->add_option("--epochs", f.epochs, "Epochs per layer (overrides config)");
    cmd->add_option("--selection-mode", f.selection_mode, "inverted | direct | auto");
    cmd->add_option("--out-dir", f.out_dir, "Directory for outputs and the run manifest");
}

AppliedConfig resolve_settings(const CommonFlags& f, BenchmarkPreset& p) {
    AppliedConfig applied;
    if (!f.config.empty()) applied = apply_config(read_config_file(f.config), p);
    if (f.seed) p.train.seed = *f.seed;
    if (f.epochs) p.train.n_epochs = *f.epochs;
    if (f.selection_mode) p.selection = parse_selection_mode(*f.selection_mode);
    return applied;
}

fs::path ensure_dir(const std::string& dir, const fs::path& fallback) {
    fs::path d = dir.empty() ? fallback : fs::path(dir);
    if (d.empty()) d = ".";
    fs::create_directories(d);
    return d;
}

void write_output(Manifest& m, const fs::path& path, const std::string& contents) {
    write_file_atomic(path, contents);
    m.add_output(path);
}

// ---------------------------------------------------------------------------
// Commands

struct TrainArgs {
    CommonFlags common;
    std::string samples;
    std::string model;
    bool verbose = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    BenchmarkPreset p = bench::default_preset(bench::BenchmarkId::F3);
    p.train = TrainConfig{};
    p.selection = SelectionMode::Auto;
    const AppliedConfig applied = resolve_settings(a.common, p);

    std::vector<Sample> samples;
    try {
        samples = read_samples_csv(a.samples);
    } catch (const CsvError& e) {
        throw UsageError(std::string("samples: ") + e.what());
    }
    if (!applied.y_min || !applied.y_max) {
        double lo = samples.front().y_actual;
        double hi = lo;
        for (const Sample& s : samples) {
            lo = std::min(lo, s.y_actual);
            hi = std::max(hi, s.y_actual);
        }
        const double pad = 0.2 * std::max(hi - lo, 1e-6);
        if (!applied.y_min) p.train.y_min = lo - pad;
        if (!applied.y_max) p.train.y_max = hi + pad;
    }
    p.train.validate();

    const fs::path model_path = a.model;
    const fs::path dir = ensure_dir(a.common.out_dir, model_path.parent_path());
    const std::string stem = model_path.stem().string();
    Manifest manifest(dir / (stem + ".manifest.json"), "train", args);
    manifest.set_config(preset_to_json(p), p.train.seed);

    try {
        const int input_dim = static_cast<int>(samples.front().x.size()) + 2;
        FFModel model = init_model(p.layer_sizes, input_dim, p.train.seed);
        const ContrastiveDataset data = build_contrastive_dataset(samples, p.train);
        ProgressSink progress;
        if (a.verbose) {
            progress = [&out, &p](const TrainProgress& tp) {
                if (tp.epoch % 100 == 0 || tp.epoch + 1 == p.train.n_epochs) {
                    out << "layer " << tp.layer << " epoch " << tp.epoch << " loss " << tp.loss << "\n";
                }
            };
        }
        TrainResult result = train(std::move(model), data, p.train, progress);
        store_calibration(result.model, calibration_subset(samples),
                          query_config_for(result.model, p.n_trials, p.selection));

        save_model(result.model, model_path);
        manifest.add_output(model_path);
        write_output(manifest, dir / (stem + ".loss.csv"), loss_history_csv(result.loss_history));
        json delta = result.final_delta;
        manifest.set("final_delta", delta);
        manifest.finish("complete");

        out << "trained " << result.model.layers.size() << " layers on " << data.positive.size()
            << " labelled points; model written to " << model_path.string() << "\n";
        return kExitOk;
    } catch (...) {
        manifest.finish("failed");
        throw;
    }
}

struct PredictArgs {
    CommonFlags common;
    std::string model;
    std::string queries;
    std::string grid;
    std::string out;
    std::optional<int> n_trials;
    std::optional<double> y_min;
    std::optional<double> y_max;
};

std::vector<Vector> parse_grid_spec(const std::string& spec, int dims) {
    std::vector<std::vector<double>> axes;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        double lo = 0.0;
        double hi = 0.0;
        int n = 0;
        char c1 = 0;
        char c2 = 0;
        std::istringstream ps(part);
        if (!(ps >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(ps >> std::ws).eof()) {
            throw UsageError("bad --grid axis '" + part + "' (expected lo:hi:n)");
        }
        std::vector<double> axis;
        for (int k = 0; k < n; ++k) {
            axis.push_back(n == 1 ? lo : (k == n - 1 ? hi : lo + (hi - lo) * k / (n - 1)));
        }
        axes.push_back(std::move(axis));
    }
    if (static_cast<int>(axes.size()) != dims) {
        throw UsageError("--grid has " + std::to_string(axes.size()) + " axes, model expects " + std::to_string(dims));
    }
    std::vector<Vector> pts{Vector(0)};
    for (const auto& axis : axes) {
        std::vector<Vector> next;
        for (const Vector& prefix : pts) {
            for (double v : axis) {
                Vector x(prefix.size() + 1);
                x.head(prefix.size()) = prefix;
                x[prefix.size()] = v;
                next.push_back(std::move(x));
            }
        }
        pts = std::move(next);
    }
    return pts;
}

int cmd_predict(const PredictArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    FFModel model;
    try {
        model = load_model(a.model);
    } catch (const ModelFormatError& e) {
        throw UsageError(std::string("model: ") + e.what());
    }
    BenchmarkPreset p;
    p.selection = SelectionMode::Inverted;
    p.n_trials = 1000;
    if (!a.common.config.empty()) apply_config(read_config_file(a.common.config), p);
    if (a.common.selection_mode) p.selection = parse_selection_mode(*a.common.selection_mode);
    if (a.n_trials) p.n_trials = *a.n_trials;

    QueryConfig query;
    query.n_trials = p.n_trials;
    query.selection_mode = p.selection;
    if (model.training) {
        query.y_min = model.training->y_min;
        query.y_max = model.training->y_max;
    }
    if (a.y_min) query.y_min = *a.y_min;
    if (a.y_max) query.y_max = *a.y_max;
    if (!model.training && (!a.y_min || !a.y_max)) {
        throw UsageError("model has no training metadata; pass --y-min and --y-max");
    }
    query.validate();

    std::vector<Vector> queries;
    if (!a.queries.empty() == !a.grid.empty()) {
        throw UsageError("pass exactly one of --queries or --grid");
    }
    if (!a.queries.empty()) {
        try {
            queries = read_queries_csv(a.queries);
        } catch (const CsvError& e) {
            throw UsageError(std::string("queries: ") + e.what());
        }
        for (const Vector& q : queries) {
            if (q.size() != model.x_dim()) {
                throw UsageError("queries have " + std::to_string(q.size()) + " coordinates, model expects " +
                                 std::to_string(model.x_dim()));
            }
        }
    } else {
        queries = parse_grid_spec(a.grid, model.x_dim());
    }

    const fs::path out_path = a.out.empty() ? fs::path(a.common.out_dir.empty() ? "." : a.common.out_dir) / "predictions.csv"
                                            : fs::path(a.out);
    const fs::path dir = ensure_dir(a.common.out_dir, out_path.parent_path());
    Manifest manifest(dir / (out_path.stem().string() + ".manifest.json"), "predict", args);
    json cfg;
    cfg["model"] = a.model;
    cfg["y_min"] = query.y_min;
    cfg["y_max"] = query.y_max;
    cfg["n_trials"] = query.n_trials;
    cfg["selection_mode"] = to_string(query.selection_mode);
    cfg["resolved_rule"] = to_string(resolve_rule(model, query.selection_mode));
    manifest.set_config(cfg, model.seed);

    const std::vector<Prediction> preds = predict_curve(model, queries, query);
    write_output(manifest, out_path, predictions_csv(preds));
    manifest.finish("complete");
    std::size_t empty = 0;
    for (const auto& pr : preds) empty += pr.empty ? 1 : 0;
    out << preds.size() << " predictions (" << empty << " empty) written to " << out_path.string() << "\n";
    return kExitOk;
}

struct BenchArgs {
    CommonFlags common;
    std::string id;
    std::optional<int> samples_per_axis;
    std::optional<int> eval_points;
    std::string param;
    std::string values;
};

BenchmarkPreset bench_preset(const BenchArgs& a) {
    BenchmarkPreset p = bench::default_preset(bench::parse_benchmark_id(a.id));
    resolve_settings(a.common, p);
    if (a.samples_per_axis) p.samples_per_axis = *a.samples_per_axis;
    if (a.eval_points) p.eval_points = *a.eval_points;
    p.train.validate();
    return p;
}

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const BenchmarkPreset p = bench_preset(a);
    const fs::path dir = ensure_dir(a.common.out_dir, "bench_" + a.id);
    Manifest manifest(dir / "manifest.json", "bench", args);
    manifest.set_config(preset_to_json(p), p.train.seed);
    try {
        const bench::RunOutcome run = bench::run_benchmark(p);
        save_model(run.trained.model, dir / "model.json");
        manifest.add_output(dir / "model.json");
        write_output(manifest, dir / "samples.csv", samples_csv(run.samples));
        write_output(manifest, dir / "loss_history.csv", loss_history_csv(run.trained.loss_history));
        write_output(manifest, dir / "predictions.csv", predictions_csv(run.predictions));

        bench::SweepRow row;
        row.benchmark = p.id;
        row.param = bench::SweepParam::NEpochs;
        row.value = p.train.n_epochs;
        row.error = run.error;
        row.wall_time_s = run.train_seconds + run.predict_seconds;
        row.seed = p.train.seed;
        write_output(manifest, dir / "results.csv", bench::sweep_csv_header() + "\n" + bench::sweep_csv_row(row) + "\n");

        for (std::size_t li = 0; li < run.eval.lines.size(); ++li) {
            std::vector<Prediction> preds;
            std::vector<double> truth;
            for (std::size_t q = 0; q < run.eval.queries.size(); ++q) {
                if (run.eval.line_index[q] != li) continue;
                preds.push_back(run.predictions[q]);
                truth.push_back(run.eval.truth[q]);
            }
            const fs::path line_path =
                dir / ("line_" + std::to_string(li + 1) + "_" + run.eval.lines[li].name + ".csv");
            write_output(manifest, line_path, line_plot_csv(preds, truth));
        }
        manifest.set("mse", run.error.mse ? json(*run.error.mse) : json(nullptr));
        manifest.set("empty_fraction", run.error.empty_fraction);
        manifest.set("train_seconds", run.train_seconds);
        manifest.set("selection_rule", to_string(resolve_rule(run.trained.model, p.selection)));
        manifest.finish("complete");

        out << a.id << ": mse=" << (run.error.mse ? format_real(*run.error.mse, 6) : "all-empty")
            << " empty_fraction=" << format_real(run.error.empty_fraction, 4)
            << " train_s=" << format_real(run.train_seconds, 4) << " -> " << dir.string() << "\n";
        return kExitOk;
    } catch (...) {
        manifest.finish("failed");
        throw;
    }
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        std::istringstream ps(part);
        double v = 0.0;
        if (!(ps >> v) || !(ps >> std::ws).eof()) throw UsageError("bad --values entry '" + part + "'");
        values.push_back(v);
    }
    if (values.empty()) throw UsageError("--values is empty");
    return values;
}

int cmd_sweep(const BenchArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const BenchmarkPreset p = bench_preset(a);
    const bench::SweepParam param = bench::parse_sweep_param(a.param);
    const std::vector<double> values = parse_values(a.values);
    const fs::path dir = ensure_dir(a.common.out_dir, "sweep_" + a.id + "_" + a.param);
    Manifest manifest(dir / "manifest.json", "sweep", args);
    json cfg = preset_to_json(p);
    cfg["sweep_param"] = a.param;
    cfg["sweep_values"] = values;
    manifest.set_config(cfg, p.train.seed);

    // Rows go straight to disk so an interrupted sweep keeps what finished;
    // the manifest stays "partial" until the last cell.
    const fs::path csv_path = dir / "sweep.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open '" + csv_path.string() + "'");
    csv << bench::sweep_csv_header() << "\n" << std::flush;
    manifest.add_output(csv_path);
    std::size_t failures = 0;
    bench::sweep(p, param, values, [&](const bench::SweepRow& row) {
        csv << bench::sweep_csv_row(row) << "\n" << std::flush;
        if (!row.failure.empty()) {
            ++failures;
            out << "cell " << a.param << "=" << format_real(row.value) << " failed: " << row.failure << "\n";
        }
    });
    manifest.set("failed_cells", failures);
    manifest.finish("complete");
    out << values.size() << " sweep rows written to " << csv_path.string() << "\n";
    return kExitOk;
}

int cmd_compare(const BenchArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const BenchmarkPreset p = bench_preset(a);
    const fs::path dir = ensure_dir(a.common.out_dir, "compare_" + a.id);
    Manifest manifest(dir / "manifest.json", "compare", args);
    manifest.set_config(preset_to_json(p), p.train.seed);
    try {
        const bench::ComparisonReport r = bench::compare_ff_bp(p);
        write_output(manifest, dir / "compare.csv",
                     bench::comparison_csv_header() + "\n" + bench::comparison_csv_row(r) + "\n");
        manifest.finish("complete");
        out << a.id << ": ff " << format_real(r.ff_time_s, 4) << " s, bp " << format_real(r.bp_time_s, 4)
            << " s at " << r.epochs << " epochs\n";
        return kExitOk;
    } catch (...) {
        manifest.finish("failed");
        throw;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Forward-Forward function regression"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a samples CSV");
    add_common(train_cmd, train_args.common);
    train_cmd->add_option("--samples", train_args.samples, "CSV with header x1,...,xd,y")->required();
    train_cmd->add_option("--model", train_args.model, "Output model file")->required();
    train_cmd->add_flag("--verbose", train_args.verbose, "Print loss every 100 epochs");

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Predict mean and CI at query points");
    add_common(predict_cmd, predict_args.common);
    predict_cmd->add_option("--model", predict_args.model, "Model file")->required();
    predict_cmd->add_option("--queries", predict_args.queries, "CSV with header x1,...,xd");
    predict_cmd->add_option("--grid", predict_args.grid, "lo:hi:n per axis, comma separated");
    predict_cmd->add_option("--out", predict_args.out, "Prediction CSV path");
    predict_cmd->add_option("--n-trials", predict_args.n_trials, "Trial points per query");
    predict_cmd->add_option("--y-min", predict_args.y_min, "Lower end of the trial grid");
    predict_cmd->add_option("--y-max", predict_args.y_max, "Upper end of the trial grid");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Run one benchmark function end to end");
    add_common(bench_cmd, bench_args.common);
    bench_cmd->add_option("id", bench_args.id, "f1..f8")->required();
    bench_cmd->add_option("--samples-per-axis", bench_args.samples_per_axis);
    bench_cmd->add_option("--eval-points", bench_args.eval_points);

    BenchArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Hyperparameter sweep on one benchmark");
    add_common(sweep_cmd, sweep_args.common);
    sweep_cmd->add_option("id", sweep_args.id, "f1..f8")->required();
    sweep_cmd->add_option("--param", sweep_args.param, "tol | n_out_tol | n_epochs | y_min")->required();
    sweep_cmd->add_option("--values", sweep_args.values, "Comma-separated values")->required();
    sweep_cmd->add_option("--samples-per-axis", sweep_args.samples_per_axis);
    sweep_cmd->add_option("--eval-points", sweep_args.eval_points);

    BenchArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "Time FF training against a backprop baseline");
    add_common(compare_cmd, compare_args.common);
    compare_cmd->add_option("id", compare_args.id, "f1..f8")->required();
    compare_cmd->add_option("--samples-per-axis", compare_args.samples_per_axis);
    compare_cmd->add_option("--eval-points", compare_args.eval_points);

    std::vector<std::string> argv_storage{"ffreg"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train_args, args, out);
        if (*predict_cmd) return cmd_predict(predict_args, args, out);
        if (*bench_cmd) return cmd_bench(bench_args, args, out);
        if (*sweep_cmd) return cmd_sweep(sweep_args, args, out);
        if (*compare_cmd) return cmd_compare(compare_args, args, out);
    } catch (const TrainingDivergedError& e) {
        err << "error: training aborted: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const bench::BaselineDivergedError& e) {
        err << "error: baseline aborted: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ffreg::cli
