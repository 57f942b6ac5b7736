#pragma once

#include "frown/error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frown {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Relu, Sigmoid, Tanh };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

/// Order of the perturbation norm. Only 1, 2 and infinity are supported.
enum class Norm { L1, L2, Linf };

std::string_view to_string(Norm p);
Norm parse_norm(std::string_view name);

/// Hölder conjugate: 1/p + 1/q = 1.
Norm dual(Norm p);

double norm(const Vector &v, Norm p);

struct Layer
{
    Matrix weights; // n_k x n_{k-1}
    Vector bias;    // n_k
};

/// Fully connected network z(k) = W(k) a(k-1) + b(k), a(k) = act(z(k)).
/// The last layer has no activation; its pre-activations are the logits.
class Network
{
public:
    Network(Activation activation, std::vector<Layer> layers);

    Activation activation() const { return _activation; }
    const std::vector<Layer> &layers() const { return _layers; }
    const Layer &layer(std::size_t k) const { return _layers.at(k); }

    /// Number of affine layers m (>= 2).
    std::size_t depth() const { return _layers.size(); }
    std::size_t inputSize() const { return _layers.front().weights.cols(); }
    std::size_t outputSize() const { return _layers.back().weights.rows(); }
    std::size_t width(std::size_t k) const { return _layers.at(k).weights.rows(); }

    /// [n, n_1, ..., n_m]
    std::vector<std::size_t> widths() const;
    std::size_t hiddenNeurons() const;

    Vector forward(const Vector &x) const;

    /// Pre-activations z(1)..z(m) at x.
    std::vector<Vector> preActivations(const Vector &x) const;

private:
    Activation _activation;
    std::vector<Layer> _layers;
};

double activate(Activation act, double z);
Vector activate(Activation act, const Vector &z);

/// Center x0, norm order p and radius epsilon of the ball B_p(x0, epsilon).
struct PerturbationSpec
{
    Vector x0;
    Norm p = Norm::Linf;
    double epsilon = 0.0;

    PerturbationSpec() = default;
    PerturbationSpec(Vector center, Norm order, double radius);

    Norm q() const { return dual(p); }
    void validate(std::size_t inputSize) const;
};

struct Sample
{
    Vector x0;
    std::optional<int> label;
};

Network load_network(const std::filesystem::path &path);
Network parse_network(std::string_view text);
std::string serialize_network(const Network &net);
void save_network(const Network &net, const std::filesystem::path &path);

Sample load_sample(const std::filesystem::path &path);
Sample parse_sample(std::string_view text);
std::string serialize_sample(const Sample &sample);

/// Deterministic per seed; entries uniform in [-scale, scale].
/// widths = [n, n_1, ..., n_m], identical to the file format.
Network generate_random_network(std::uint64_t seed, const std::vector<std::size_t> &widths,
                                Activation activation, double scale);

/// Index of the largest output.
int predicted_label(const Network &net, const Vector &x);

} // namespace frown
