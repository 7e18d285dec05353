#include "ffreg/network.hpp"

#include <algorithm>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ffreg/random.hpp"

namespace ffreg {

using nlohmann::json;

std::string to_string(SelectionRule rule) {
    return rule == SelectionRule::Direct ? "direct" : "inverted";
}

SelectionRule parse_selection_rule(const std::string& text) {
    if (text == "inverted") return SelectionRule::Inverted;
    if (text == "direct") return SelectionRule::Direct;
    throw std::invalid_argument("unknown selection rule '" + text + "'");
}

FFLayer::FFLayer(Matrix weights, Vector bias, Vector zeta)
    : weights_(std::move(weights)), bias_(std::move(bias)), zeta_(std::move(zeta)) {
    if (weights_.rows() == 0 || weights_.cols() == 0) {
        throw std::invalid_argument("FFLayer: empty weight matrix");
    }
    if (bias_.size() != weights_.rows() || zeta_.size() != weights_.rows()) {
        throw std::invalid_argument("FFLayer: bias and zeta must have out_dim elements");
    }
    if (!weights_.allFinite() || !bias_.allFinite() || !zeta_.allFinite()) {
        throw std::invalid_argument("FFLayer: non-finite parameter");
    }
}

bool operator==(const FFLayer& a, const FFLayer& b) {
    return a.weights_.rows() == b.weights_.rows() && a.weights_.cols() == b.weights_.cols() &&
           a.weights_ == b.weights_ && a.bias_ == b.bias_ && a.zeta_ == b.zeta_;
}

std::size_t FFModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
}

void FFModel::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("model has no layers");
    }
    if (input_dim < 3) {
        throw std::invalid_argument("model input_dim must be at least 3");
    }
    Eigen::Index expected = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in_dim() != expected) {
            throw std::invalid_argument("layer " + std::to_string(i) + " expects input dim " +
                                        std::to_string(layers[i].in_dim()) + ", previous gives " +
                                        std::to_string(expected));
        }
        expected = layers[i].out_dim();
    }
}

FFModel init_model(std::span<const int> layer_sizes, int input_dim, std::uint64_t seed) {
    if (layer_sizes.empty()) {
        throw std::invalid_argument("init_model: layer list is empty");
    }
    if (input_dim < 3) {
        throw std::invalid_argument("init_model: input_dim must be at least 3");
    }
    SeededRng rng(seed);
    FFModel model;
    model.input_dim = input_dim;
    model.seed = seed;
    int fan_in = input_dim;
    for (int size : layer_sizes) {
        if (size < 1) {
            throw std::invalid_argument("init_model: layer sizes must be positive");
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(size, fan_in);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                w(r, c) = rng.uniform(-bound, bound);
            }
        }
        Vector zeta(size);
        for (int r = 0; r < size; ++r) zeta[r] = rng.normal();
        zeta /= zeta.norm();
        model.layers.emplace_back(std::move(w), Vector::Zero(size), std::move(zeta));
        fan_in = size;
    }
    return model;
}

Vector layer_forward(const FFLayer& layer, const Vector& input) {
    if (input.size() != layer.in_dim()) {
        throw std::invalid_argument("layer_forward: input has dim " + std::to_string(input.size()) +
                                    ", layer expects " + std::to_string(layer.in_dim()));
    }
    Vector z = layer.weights() * input + layer.bias();
    return z.unaryExpr([](double v) { return gelu(v); });
}

Matrix layer_forward_batch(const FFLayer& layer, const Matrix& inputs) {
    if (inputs.cols() != layer.in_dim()) {
        throw std::invalid_argument("layer_forward_batch: input has dim " +
                                    std::to_string(inputs.cols()) + ", layer expects " +
                                    std::to_string(layer.in_dim()));
    }
    Matrix out(inputs.rows(), layer.out_dim());
    constexpr Eigen::Index kBlock = 1024;
    Matrix z;
    for (Eigen::Index start = 0; start < inputs.rows(); start += kBlock) {
        const Eigen::Index len = std::min(kBlock, inputs.rows() - start);
        z.noalias() = inputs.middleRows(start, len) * layer.weights().transpose();
        z.rowwise() += layer.bias().transpose();
        out.middleRows(start, len) = gelu(z);
    }
    return out;
}

LayerTrace forward_trace(const FFModel& model, const Vector& input) {
    if (input.size() != model.input_dim) {
        throw std::invalid_argument("forward_trace: input has dim " + std::to_string(input.size()) +
                                    ", model expects " + std::to_string(model.input_dim));
    }
    LayerTrace trace;
    trace.outputs.reserve(model.layers.size());
    trace.goodness.reserve(model.layers.size());
    Vector current = input;
    for (const auto& layer : model.layers) {
        current = layer_forward(layer, current);
        trace.goodness.push_back(cosine_similarity(current, layer.zeta()));
        trace.outputs.push_back(current);
    }
    return trace;
}

double total_goodness(const LayerTrace& trace) {
    double sum = 0.0;
    for (double g : trace.goodness) sum += g;
    return sum;
}

Vector total_goodness_batch(const FFModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_dim) {
        throw std::invalid_argument("total_goodness_batch: input has dim " +
                                    std::to_string(inputs.cols()) + ", model expects " +
                                    std::to_string(model.input_dim));
    }
    Vector total = Vector::Zero(inputs.rows());
    Matrix current = inputs;
    for (const auto& layer : model.layers) {
        current = layer_forward_batch(layer, current);
        total += cosine_similarity_rows(current, layer.zeta());
    }
    return total;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vector_to_json(const Vector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(std::move(row));
    }
    return rows;
}

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
        throw ModelFormatError(path, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ModelFormatError(path + "." + key, "missing field");
    }
    return *it;
}

double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ModelFormatError(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ModelFormatError(path, "non-finite number");
    }
    return v;
}

Vector read_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ModelFormatError(path, "expected a non-empty array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = read_number(j[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ModelFormatError(path, "expected a non-empty array of rows");
    }
    Matrix m;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string row_path = path + "[" + std::to_string(r) + "]";
        const Vector row = read_vector(j[r], row_path);
        if (r == 0) {
            m.resize(static_cast<Eigen::Index>(j.size()), row.size());
        } else if (row.size() != m.cols()) {
            throw ModelFormatError(row_path, "ragged row");
        }
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

json training_to_json(const TrainingInfo& t) {
    json j;
    j["tol"] = t.tol;
    j["y_min"] = t.y_min;
    j["y_max"] = t.y_max;
    j["n_epochs"] = t.n_epochs;
    j["final_delta"] = t.final_delta;
    json dom = json::array();
    for (const auto& [lo, hi] : t.x_domain) dom.push_back({lo, hi});
    j["x_domain"] = dom;
    j["calibrated_rule"] = t.calibrated_rule ? json(to_string(*t.calibrated_rule)) : json(nullptr);
    j["agreement_inverted"] = t.agreement_inverted;
    j["agreement_direct"] = t.agreement_direct;
    return j;
}

TrainingInfo training_from_json(const json& j, const std::string& path) {
    TrainingInfo t;
    t.tol = read_number(field(j, "tol", path), path + ".tol");
    t.y_min = read_number(field(j, "y_min", path), path + ".y_min");
    t.y_max = read_number(field(j, "y_max", path), path + ".y_max");
    const json& epochs = field(j, "n_epochs", path);
    if (!epochs.is_number_integer()) throw ModelFormatError(path + ".n_epochs", "expected an integer");
    t.n_epochs = epochs.get<int>();
    const json& delta = field(j, "final_delta", path);
    if (!delta.is_array()) throw ModelFormatError(path + ".final_delta", "expected an array");
    for (std::size_t i = 0; i < delta.size(); ++i) {
        t.final_delta.push_back(read_number(delta[i], path + ".final_delta[" + std::to_string(i) + "]"));
    }
    const json& dom = field(j, "x_domain", path);
    if (!dom.is_array()) throw ModelFormatError(path + ".x_domain", "expected an array");
    for (std::size_t i = 0; i < dom.size(); ++i) {
        const std::string p = path + ".x_domain[" + std::to_string(i) + "]";
        if (!dom[i].is_array() || dom[i].size() != 2) throw ModelFormatError(p, "expected [lo, hi]");
        t.x_domain.emplace_back(read_number(dom[i][0], p + "[0]"), read_number(dom[i][1], p + "[1]"));
    }
    const json& rule = field(j, "calibrated_rule", path);
    if (!rule.is_null()) {
        if (!rule.is_string()) throw ModelFormatError(path + ".calibrated_rule", "expected a string");
        try {
            t.calibrated_rule = parse_selection_rule(rule.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ModelFormatError(path + ".calibrated_rule", e.what());
        }
    }
    t.agreement_inverted = read_number(field(j, "agreement_inverted", path), path + ".agreement_inverted");
    t.agreement_direct = read_number(field(j, "agreement_direct", path), path + ".agreement_direct");
    return t;
}

}  // namespace

std::string serialize_model(const FFModel& model) {
    model.validate();
    json root;
    root["version"] = kModelFormatVersion;
    root["input_dim"] = model.input_dim;
    root["activation"] = "gelu";
    root["seed"] = model.seed;
    root["loss_scale"] = model.loss_scale.theta();
    json layers = json::array();
    for (const auto& layer : model.layers) {
        json l;
        l["weights"] = matrix_to_json(layer.weights());
        l["bias"] = vector_to_json(layer.bias());
        l["zeta"] = vector_to_json(layer.zeta());
        layers.push_back(std::move(l));
    }
    root["layers"] = std::move(layers);
    root["training"] = model.training ? training_to_json(*model.training) : json(nullptr);
    // nlohmann emits the shortest decimal form that parses back to the same
    // double, so the text round-trips bit-exactly.
    return root.dump(1) + "\n";
}

FFModel parse_model(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelFormatError("$", std::string("not valid JSON: ") + e.what());
    }
    const std::string top = "$";
    const json& version = field(root, "version", top);
    if (!version.is_number_integer()) {
        throw ModelFormatError("$.version", "expected an integer");
    }
    if (version.get<int>() != kModelFormatVersion) {
        throw UnsupportedVersionError("$.version", "unsupported model format version " +
                                                       std::to_string(version.get<int>()) +
                                                       " (expected " +
                                                       std::to_string(kModelFormatVersion) + ")");
    }
    FFModel model;
    const json& input_dim = field(root, "input_dim", top);
    if (!input_dim.is_number_integer()) throw ModelFormatError("$.input_dim", "expected an integer");
    model.input_dim = input_dim.get<int>();

    const json& activation = field(root, "activation", top);
    if (activation != "gelu") throw ModelFormatError("$.activation", "only \"gelu\" is supported");

    const json& seed = field(root, "seed", top);
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ModelFormatError("$.seed", "expected a non-negative integer");
    }
    model.seed = seed.get<std::uint64_t>();

    const double theta = read_number(field(root, "loss_scale", top), "$.loss_scale");
    if (!(theta > 0.0)) throw ModelFormatError("$.loss_scale", "must be positive");
    model.loss_scale = LossScale(theta);

    const json& layers = field(root, "layers", top);
    if (!layers.is_array() || layers.empty()) {
        throw ModelFormatError("$.layers", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string p = "$.layers[" + std::to_string(i) + "]";
        Matrix w = read_matrix(field(layers[i], "weights", p), p + ".weights");
        Vector b = read_vector(field(layers[i], "bias", p), p + ".bias");
        Vector z = read_vector(field(layers[i], "zeta", p), p + ".zeta");
        if (b.size() != w.rows()) throw ModelFormatError(p + ".bias", "length differs from weight rows");
        if (z.size() != w.rows()) throw ModelFormatError(p + ".zeta", "length differs from weight rows");
        model.layers.emplace_back(std::move(w), std::move(b), std::move(z));
    }
    const json& training = field(root, "training", top);
    if (!training.is_null()) {
        model.training = training_from_json(training, "$.training");
    }
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError("$.layers", e.what());
    }
    return model;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

void save_model(const FFModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

FFModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ModelFormatError("$", "cannot open model file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace ffreg
