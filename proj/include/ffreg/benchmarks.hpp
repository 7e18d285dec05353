#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffreg/inference.hpp"
#include "ffreg/network.hpp"
#include "ffreg/trainer.hpp"

namespace ffreg::bench {

enum class BenchmarkId { F1, F2, F3, F4, F5, F6, F7, F8 };

std::string to_string(BenchmarkId id);
/// Accepts "f1".."f8"; throws std::invalid_argument otherwise.
BenchmarkId parse_benchmark_id(const std::string& text);

struct DomainBox {
    std::vector<std::pair<double, double>> axes;
    int dim() const { return static_cast<int>(axes.size()); }
};

struct BenchmarkFunction {
    BenchmarkId id;
    int arity;
    DomainBox box;
    double (*evaluate)(const Vector& x);
    /// Where the domain box comes from.
    const char* box_note;
};

const BenchmarkFunction& benchmark(BenchmarkId id);

double eval_function(BenchmarkId id, const Vector& x);

/// Evenly spaced tensor grid over the box, row-major with the last axis fastest.
std::vector<Sample> make_grid(const BenchmarkFunction& fn, int per_axis);

/// Evenly spaced points over a box (no function values).
std::vector<Vector> grid_points(const DomainBox& box, int per_axis);

struct EvalLine {
    std::string name;
    Vector start;
    Vector end;
    int n_points = 50;

    /// Points at t = 0, 1/(n-1), ..., 1.
    std::vector<Vector> points() const;
};

/// Four body diagonals followed by one diagonal on each of the four faces
/// parallel to the x3 axis, each running from x3 = lo to x3 = hi.
std::vector<EvalLine> cube_diagonals(const DomainBox& box, int n_points = 50);

struct MseResult {
    std::optional<double> mse;  // empty when every prediction was empty
    double empty_fraction = 0.0;
    std::size_t n_valid = 0;
    std::size_t n_empty = 0;

    bool all_empty() const { return !mse.has_value(); }
};

MseResult mse(std::span<const Prediction> predictions, std::span<const double> truth);

/// Everything needed to run one benchmark end to end.
struct BenchmarkPreset {
    BenchmarkId id = BenchmarkId::F3;
    std::vector<int> layer_sizes{64, 128, 32};
    TrainConfig train;
    int n_trials = 1000;
    SelectionMode selection = SelectionMode::Auto;
    int samples_per_axis = 20;
    /// 1-D: dense query count; 2-D: held-out grid per axis; 3-D: points per line.
    int eval_points = 200;
};

/// Published per-function hyperparameters plus local defaults for everything
/// they leave open.
BenchmarkPreset default_preset(BenchmarkId id);

/// Range of f over the box (dense sampling), used to place y_min/y_max.
std::pair<double, double> function_range(const BenchmarkFunction& fn);

/// y_min/y_max = range padded by `fraction` of its width on both sides.
void pad_y_range(BenchmarkPreset& preset, double fraction);

struct EvalSet {
    std::vector<Vector> queries;
    std::vector<double> truth;
    /// Line name for each query (3-D presets only).
    std::vector<std::size_t> line_index;
    std::vector<EvalLine> lines;
};

EvalSet make_eval_set(const BenchmarkPreset& preset);

struct RunOutcome {
    std::vector<Sample> samples;
    TrainResult trained;
    EvalSet eval;
    std::vector<Prediction> predictions;
    MseResult error;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;
};

/// make_grid -> dataset -> train -> calibrate selection -> predict on the eval set.
RunOutcome run_benchmark(const BenchmarkPreset& preset, const ProgressSink& progress = {});

/// Same pipeline on caller-supplied samples and queries.
RunOutcome run_pipeline(const BenchmarkPreset& preset, std::vector<Sample> samples, EvalSet eval,
                        const ProgressSink& progress = {});

enum class SweepParam { Tol, NOutTol, NEpochs, YMin };

std::string to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& text);

struct SweepRow {
    BenchmarkId benchmark = BenchmarkId::F3;
    SweepParam param = SweepParam::Tol;
    double value = 0.0;
    MseResult error;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    /// Non-empty when the cell failed; the numeric fields are then NaN.
    std::string failure;
};

/// Applies one swept value to a copy of `base`.
BenchmarkPreset apply_sweep_value(BenchmarkPreset base, SweepParam param, double value);

/// One full train+predict cycle per value, each with base.train.seed. Failed
/// cells are recorded and the sweep continues. `on_row` fires as each cell
/// finishes.
std::vector<SweepRow> sweep(const BenchmarkPreset& base, SweepParam param, std::span<const double> values,
                            const std::function<void(const SweepRow&)>& on_row = {});

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

struct ComparisonReport {
    BenchmarkId benchmark = BenchmarkId::F3;
    int epochs = 0;
    double ff_time_s = 0.0;
    double bp_time_s = 0.0;
    std::optional<double> ff_mse;
    std::optional<double> bp_mse;
    std::size_t ff_parameters = 0;
    std::size_t bp_parameters = 0;
};

/// FF pipeline and BP baseline at the same epoch count and layer sizes.
ComparisonReport compare_ff_bp(const BenchmarkPreset& preset);

std::string comparison_csv_header();
std::string comparison_csv_row(const ComparisonReport& r);

}  // namespace ffreg::bench
