#pragma once

#include "frown/model.hpp"
#include "frown/relax.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace frown::crown {

using relax::Line;
using relax::Side;

/// Pre-activation bounds l(k) <= z(k) <= u(k). Index k = 0 is the first
/// affine layer; index depth()-1 holds the output bounds.
struct LayerBounds
{
    std::vector<Vector> lower;
    std::vector<Vector> upper;

    std::size_t layers() const { return lower.size(); }
};

struct NeuronLines
{
    Line lower;
    Line upper;
};

/// Bounding lines for the hidden layers 0..layers()-1 of a network.
struct LineSet
{
    std::vector<std::vector<NeuronLines>> layers;
};

/// coeffs . x + offset bounds z(k)_i over the ball; gamma is its concretization.
struct AffineBound
{
    Vector coeffs;
    double offset = 0.0;
    double gamma = 0.0;
    Side sense = Side::Lower;
};

/// Composes the bounding lines of layers 0..layer-1 backwards from row
/// `neuron` of layer `layer` (layer >= 1). Nonnegative coefficients take the
/// lower line for a lower bound and the upper line for an upper bound;
/// nonpositive coefficients take the other one. gamma is left at 0.
AffineBound backward_bound(const Network &net, std::size_t layer, std::size_t neuron,
                           const LineSet &lines, Side sense);

/// Row `neuron` of layer 0 as an affine bound (exact, no relaxation).
AffineBound first_layer_bound(const Network &net, std::size_t neuron, Side sense);

/// coeffs . x0 -/+ epsilon * ||coeffs||_q + offset. Sets bound.gamma and returns it.
double concretize(AffineBound &bound, const PerturbationSpec &spec);

/// The point of the ball at which the affine function reaches its
/// concretized value for the given sense.
Vector dual_maximizer(const Vector &coeffs, const PerturbationSpec &spec, Side sense);

enum class Mode { SelfConsistent, PerNeuron };

/// Where a line is being chosen. In per-neuron mode `target*` names the
/// neuron whose bound the line serves.
struct ChoiceSite
{
    std::size_t layer = 0;
    std::size_t neuron = 0;
    Side side = Side::Lower;
    double l = 0.0;
    double u = 0.0;
    std::optional<std::size_t> targetLayer;
    std::optional<std::size_t> targetNeuron;
    std::optional<Side> targetSense;
};

/// Picks a variable value inside a one-variable LineSpace.
using LineChooser = std::function<double(const relax::LineSpace &, const ChoiceSite &)>;

/// Adaptive baseline: relu lower slope 1 when u >= |l| else 0, s-shaped
/// tangent points at the middle of their admissible range.
double default_choice(const relax::LineSpace &space, const ChoiceSite &site);

struct NeuronSpaces
{
    relax::LineSpace lower;
    relax::LineSpace upper;
};

/// Line spaces for every neuron of hidden layers 0..layerCount-1.
std::vector<std::vector<NeuronSpaces>> line_spaces(const Network &net, const LayerBounds &bounds,
                                                   std::size_t layerCount);

/// Lines for hidden layers 0..layerCount-1 picked by `chooser`.
LineSet choose_lines(const Network &net, const LayerBounds &bounds, std::size_t layerCount,
                     const LineChooser &chooser, const ChoiceSite &target = {});

/// Per-neuron mode bookkeeping: the lines each target neuron used.
struct TargetLines
{
    LineSet lower;
    LineSet upper;
};

struct Result
{
    LayerBounds bounds;
    /// Lines for every hidden layer (self-consistent mode).
    LineSet lines;
    /// perNeuron[layer][neuron] (per-neuron mode, layers >= 1).
    std::vector<std::vector<TargetLines>> perNeuron;
    std::vector<AffineBound> outputLower;
    std::vector<AffineBound> outputUpper;
};

/// Layer 0 bounds come straight from the ball; each later layer is bounded by
/// backward_bound + concretize using lines picked from the bounds so far.
Result propagate(const Network &net, const PerturbationSpec &spec, Mode mode = Mode::SelfConsistent,
                 const LineChooser &chooser = default_choice);

/// gamma(lower of label) - gamma(upper of j) for every j != label, in class order.
std::vector<double> margins(const Vector &outputLower, const Vector &outputUpper, std::size_t label);

} // namespace frown::crown
