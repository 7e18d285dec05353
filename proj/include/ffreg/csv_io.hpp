#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffreg/inference.hpp"
#include "ffreg/trainer.hpp"

namespace ffreg {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "%.{precision}g"; NaN prints as "nan".
std::string format_real(double v, int precision = 17);

/// Header `x1,...,xd,y`, one sample per row.
std::vector<Sample> read_samples_csv(const std::filesystem::path& path);
std::string samples_csv(std::span<const Sample> samples);

/// Header `x1,...,xd`.
std::vector<Vector> read_queries_csv(const std::filesystem::path& path);

/// `x1..xd,y_mean,y_std,ci_low,ci_high,n_selected,empty,extrapolated`.
std::string predictions_csv(std::span<const Prediction> predictions);

/// `t,x1,x2,x3,y_true,y_mean,ci_low,ci_high` along one evaluation line.
std::string line_plot_csv(std::span<const Prediction> predictions, std::span<const double> truth);

/// `layer,epoch,loss`.
std::string loss_history_csv(const std::vector<std::vector<double>>& history);

}  // namespace ffreg
