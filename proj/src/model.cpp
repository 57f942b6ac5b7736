#include "frown/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace frown {

using nlohmann::json;

std::string_view to_string(Activation act)
{
    switch (act) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    }
    return "?";
}

Activation parse_activation(std::string_view name)
{
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    throw ParseError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Norm p)
{
    switch (p) {
    case Norm::L1: return "1";
    case Norm::L2: return "2";
    case Norm::Linf: return "inf";
    }
    return "?";
}

Norm parse_norm(std::string_view name)
{
    if (name == "1" || name == "l1") return Norm::L1;
    if (name == "2" || name == "l2") return Norm::L2;
    if (name == "inf" || name == "linf" || name == "i") return Norm::Linf;
    throw UnsupportedError("unsupported norm '" + std::string(name) + "' (expected 1, 2 or inf)");
}

Norm dual(Norm p)
{
    switch (p) {
    case Norm::L1: return Norm::Linf;
    case Norm::L2: return Norm::L2;
    case Norm::Linf: return Norm::L1;
    }
    return Norm::L2;
}

double norm(const Vector &v, Norm p)
{
    switch (p) {
    case Norm::L1: return v.lpNorm<1>();
    case Norm::L2: return v.norm();
    case Norm::Linf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

double activate(Activation act, double z)
{
    switch (act) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Tanh: return std::tanh(z);
    }
    return z;
}

Vector activate(Activation act, const Vector &z)
{
    Vector a(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        a[i] = activate(act, z[i]);
    return a;
}

Network::Network(Activation activation, std::vector<Layer> layers)
    : _activation(activation), _layers(std::move(layers))
{
    if (_layers.size() < 2)
        throw ShapeError("network needs at least 2 layers, got " + std::to_string(_layers.size()));

    for (std::size_t k = 0; k < _layers.size(); ++k) {
        const Layer &layer = _layers[k];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
            throw ShapeError("layer " + std::to_string(k + 1) + " has an empty weight matrix");
        if (layer.bias.size() != layer.weights.rows())
            throw ShapeError("layer " + std::to_string(k + 1) + " bias length " +
                             std::to_string(layer.bias.size()) + " != rows " +
                             std::to_string(layer.weights.rows()));
        if (k > 0 && layer.weights.cols() != _layers[k - 1].weights.rows())
            throw ShapeError("layer " + std::to_string(k + 1) + " weights have " +
                             std::to_string(layer.weights.cols()) + " columns but layer " +
                             std::to_string(k) + " outputs " +
                             std::to_string(_layers[k - 1].weights.rows()));
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw ShapeError("layer " + std::to_string(k + 1) + " has a non-finite entry");
    }
}

std::vector<std::size_t> Network::widths() const
{
    std::vector<std::size_t> result{inputSize()};
    for (const Layer &layer : _layers)
        result.push_back(layer.weights.rows());
    return result;
}

std::size_t Network::hiddenNeurons() const
{
    std::size_t total = 0;
    for (std::size_t k = 0; k + 1 < _layers.size(); ++k)
        total += _layers[k].weights.rows();
    return total;
}

std::vector<Vector> Network::preActivations(const Vector &x) const
{
    if (static_cast<std::size_t>(x.size()) != inputSize())
        throw ShapeError("input length " + std::to_string(x.size()) + " != network input size " +
                         std::to_string(inputSize()));
    std::vector<Vector> z;
    z.reserve(_layers.size());
    Vector a = x;
    for (std::size_t k = 0; k < _layers.size(); ++k) {
        z.push_back(_layers[k].weights * a + _layers[k].bias);
        if (k + 1 < _layers.size())
            a = activate(_activation, z.back());
    }
    return z;
}

Vector Network::forward(const Vector &x) const
{
    return preActivations(x).back();
}

PerturbationSpec::PerturbationSpec(Vector center, Norm order, double radius)
    : x0(std::move(center)), p(order), epsilon(radius)
{
}

void PerturbationSpec::validate(std::size_t inputSize) const
{
    if (static_cast<std::size_t>(x0.size()) != inputSize)
        throw ShapeError("x0 length " + std::to_string(x0.size()) + " != network input size " +
                         std::to_string(inputSize));
    if (!x0.allFinite())
        throw ShapeError("x0 has a non-finite entry");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw Error("epsilon must be finite and non-negative");
}

namespace {

json parse_json(std::string_view text)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path &path, const std::string &content)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << content;
}

std::vector<double> numbers(const json &node, const std::string &what)
{
    if (!node.is_array())
        throw ParseError(what + " must be an array");
    std::vector<double> values;
    values.reserve(node.size());
    for (const json &entry : node) {
        if (!entry.is_number())
            throw ParseError(what + " must contain only numbers");
        values.push_back(entry.get<double>());
    }
    return values;
}

Vector to_vector(const std::vector<double> &values)
{
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

Network parse_network(std::string_view text)
{
    const json doc = parse_json(text);
    if (!doc.is_object())
        throw ParseError("network document must be an object");
    for (const char *key : {"activation", "widths", "weights", "biases"})
        if (!doc.contains(key))
            throw ParseError(std::string("network document lacks '") + key + "'");
    if (!doc["activation"].is_string())
        throw ParseError("'activation' must be a string");

    const Activation activation = parse_activation(doc["activation"].get<std::string>());

    std::vector<std::size_t> widths;
    for (const double w : numbers(doc["widths"], "widths")) {
        if (w < 1 || w != std::floor(w))
            throw ParseError("widths must be positive integers");
        widths.push_back(static_cast<std::size_t>(w));
    }
    if (widths.size() < 2)
        throw ParseError("widths must list the input size and at least one layer");

    const json &weights = doc["weights"];
    const json &biases = doc["biases"];
    const std::size_t m = widths.size() - 1;
    if (!weights.is_array() || weights.size() != m || !biases.is_array() || biases.size() != m)
        throw ShapeError("expected " + std::to_string(m) + " weight and bias arrays");

    std::vector<Layer> layers;
    for (std::size_t k = 0; k < m; ++k) {
        const std::string name = "layer " + std::to_string(k + 1);
        const json &rows = weights[k];
        if (!rows.is_array())
            throw ParseError(name + " weights must be an array of rows");
        const std::size_t nRows = rows.size();
        if (nRows == 0)
            throw ShapeError(name + " weights are empty");
        const std::size_t nCols = rows[0].is_array() ? rows[0].size() : 0;
        if (nRows != widths[k + 1] || nCols != widths[k])
            throw ShapeError(name + " weights are " + std::to_string(nRows) + "x" +
                             std::to_string(nCols) + ", expected " +
                             std::to_string(widths[k + 1]) + "x" + std::to_string(widths[k]));

        Layer layer{Matrix(nRows, nCols), Vector()};
        for (std::size_t r = 0; r < nRows; ++r) {
            const std::vector<double> row = numbers(rows[r], name + " weight row");
            if (row.size() != nCols)
                throw ShapeError(name + " has ragged weight rows");
            for (std::size_t c = 0; c < nCols; ++c)
                layer.weights(r, c) = row[c];
        }
        layer.bias = to_vector(numbers(biases[k], name + " bias"));
        layers.push_back(std::move(layer));
    }
    return Network(activation, std::move(layers));
}

Network load_network(const std::filesystem::path &path)
{
    return parse_network(read_file(path));
}

std::string serialize_network(const Network &net)
{
    json doc;
    doc["activation"] = std::string(to_string(net.activation()));
    doc["widths"] = net.widths();
    json weights = json::array();
    json biases = json::array();
    for (const Layer &layer : net.layers()) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                row.push_back(layer.weights(r, c));
            rows.push_back(std::move(row));
        }
        weights.push_back(std::move(rows));
        biases.push_back(std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size()));
    }
    doc["weights"] = std::move(weights);
    doc["biases"] = std::move(biases);
    return doc.dump(1);
}

void save_network(const Network &net, const std::filesystem::path &path)
{
    write_file(path, serialize_network(net));
}

Sample parse_sample(std::string_view text)
{
    const json doc = parse_json(text);
    if (!doc.is_object() || !doc.contains("x0"))
        throw ParseError("sample document must be an object with 'x0'");
    Sample sample;
    sample.x0 = to_vector(numbers(doc["x0"], "x0"));
    if (doc.contains("label") && !doc["label"].is_null()) {
        if (!doc["label"].is_number_integer())
            throw ParseError("'label' must be an integer");
        sample.label = doc["label"].get<int>();
    }
    return sample;
}

Sample load_sample(const std::filesystem::path &path)
{
    return parse_sample(read_file(path));
}

std::string serialize_sample(const Sample &sample)
{
    json doc;
    doc["x0"] = std::vector<double>(sample.x0.data(), sample.x0.data() + sample.x0.size());
    if (sample.label)
        doc["label"] = *sample.label;
    return doc.dump();
}

Network generate_random_network(std::uint64_t seed, const std::vector<std::size_t> &widths,
                                Activation activation, double scale)
{
    if (widths.size() < 2)
        throw ShapeError("widths must list the input size and at least one layer");
    if (!(scale > 0.0))
        throw Error("scale must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-scale, scale);
    std::vector<Layer> layers;
    for (std::size_t k = 1; k < widths.size(); ++k) {
        Layer layer{Matrix(widths[k], widths[k - 1]), Vector(widths[k])};
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = uniform(rng);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            layer.bias[r] = uniform(rng);
        layers.push_back(std::move(layer));
    }
    return Network(activation, std::move(layers));
}

int predicted_label(const Network &net, const Vector &x)
{
    Eigen::Index best = 0;
    net.forward(x).maxCoeff(&best);
    return static_cast<int>(best);
}

} // namespace frown
