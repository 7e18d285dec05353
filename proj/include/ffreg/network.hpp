#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ffreg/core_math.hpp"

namespace ffreg {

enum class Activation { Gelu };

/// How in-tol trials are picked at inference: `inverted` keeps trials whose
/// out-tol label scores higher, `direct` keeps trials whose in-tol label does.
enum class SelectionRule { Inverted, Direct };

std::string to_string(SelectionRule rule);
SelectionRule parse_selection_rule(const std::string& text);

/// One dense+GELU layer with its fixed goodness direction.
class FFLayer {
public:
    FFLayer(Matrix weights, Vector bias, Vector zeta);

    Matrix& weights() { return weights_; }
    const Matrix& weights() const { return weights_; }
    Vector& bias() { return bias_; }
    const Vector& bias() const { return bias_; }
    const Vector& zeta() const { return zeta_; }

    Eigen::Index in_dim() const { return weights_.cols(); }
    Eigen::Index out_dim() const { return weights_.rows(); }
    std::size_t parameter_count() const {
        return static_cast<std::size_t>(weights_.size() + bias_.size());
    }

    friend bool operator==(const FFLayer& a, const FFLayer& b);

private:
    Matrix weights_;
    Vector bias_;
    Vector zeta_;
};

/// What the trainer knew when it produced the model. Inference uses it for
/// default trial ranges, extrapolation flags and the calibrated selection rule.
struct TrainingInfo {
    double tol = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    int n_epochs = 0;
    std::vector<double> final_delta;
    std::vector<std::pair<double, double>> x_domain;
    std::optional<SelectionRule> calibrated_rule;
    double agreement_inverted = 0.0;
    double agreement_direct = 0.0;

    friend bool operator==(const TrainingInfo&, const TrainingInfo&) = default;
};

struct FFModel {
    std::vector<FFLayer> layers;
    int input_dim = 0;
    Activation activation = Activation::Gelu;
    std::uint64_t seed = 0;
    LossScale loss_scale;
    std::optional<TrainingInfo> training;

    /// Number of function-domain coordinates (input_dim minus y and label).
    int x_dim() const { return input_dim - 2; }
    std::size_t parameter_count() const;

    /// Throws std::invalid_argument when layer shapes do not chain.
    void validate() const;

    friend bool operator==(const FFModel&, const FFModel&) = default;
};

struct LayerTrace {
    std::vector<Vector> outputs;
    std::vector<double> goodness;
};

FFModel init_model(std::span<const int> layer_sizes, int input_dim, std::uint64_t seed);

Vector layer_forward(const FFLayer& layer, const Vector& input);

/// Batched layer_forward: each row of `inputs` is one input vector.
Matrix layer_forward_batch(const FFLayer& layer, const Matrix& inputs);

LayerTrace forward_trace(const FFModel& model, const Vector& input);

double total_goodness(const LayerTrace& trace);

/// Summed goodness over all layers for every row of `inputs`.
Vector total_goodness_batch(const FFModel& model, const Matrix& inputs);

/// Malformed model file; `field()` names the offending JSON path.
class ModelFormatError : public std::runtime_error {
public:
    ModelFormatError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class UnsupportedVersionError : public ModelFormatError {
public:
    using ModelFormatError::ModelFormatError;
};

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const FFModel& model);
FFModel parse_model(const std::string& text);

/// Writes to a sibling temp file and renames it into place.
void save_model(const FFModel& model, const std::filesystem::path& path);
FFModel load_model(const std::filesystem::path& path);

/// Atomic text-file write shared by everything that emits artifacts.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ffreg
