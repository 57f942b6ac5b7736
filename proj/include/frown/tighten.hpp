#pragma once

// Bound tightening by projected gradient over the free bounding-line
// variables of every earlier layer (FROWN).

#include "frown/crown.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace frown::tighten {

using crown::AffineBound;
using crown::LayerBounds;
using relax::Side;

struct Variable
{
    std::size_t layer = 0;
    std::size_t neuron = 0;
    Side side = Side::Lower;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// One entry per one-variable line space among the layers below the target.
struct VariableVector
{
    std::vector<Variable> entries;

    std::size_t size() const { return entries.size(); }
    std::vector<double> values() const;
    void assign(const std::vector<double> &values);
};

struct OptimizerConfig
{
    double stepSize = 0.05;
    int maxIters = 100;
    int restarts = 1;
    std::size_t groupSize = 1;
    double improvementTol = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Evaluation
{
    /// One gamma per member neuron.
    std::vector<double> gammas;
    std::vector<AffineBound> bounds;
    /// d(sum of member gammas)/d(variable).
    std::vector<double> gradient;
};

/// gamma of a group of neurons in one layer as a function of the free line
/// variables of all layers below it. Layer bounds below `layer` are fixed.
class Objective
{
public:
    Objective(const Network &net, const PerturbationSpec &spec, const LayerBounds &bounds,
              std::size_t layer, std::vector<std::size_t> neurons, Side sense);

    Side sense() const { return _sense; }
    std::size_t layer() const { return _layer; }
    const std::vector<std::size_t> &neurons() const { return _neurons; }

    /// Variables initialized by the default CROWN chooser.
    const VariableVector &initial() const { return _initial; }

    crown::LineSet lines(const VariableVector &vars) const;
    Evaluation evaluate(const VariableVector &vars) const;

private:
    const Network &_net;
    const PerturbationSpec &_spec;
    std::size_t _layer;
    std::vector<std::size_t> _neurons;
    Side _sense;
    std::vector<std::vector<crown::NeuronSpaces>> _spaces;
    /// _index[v][j] = {lower variable, upper variable}, -1 when fixed.
    std::vector<std::vector<std::array<int, 2>>> _index;
    VariableVector _initial;
};

/// gammas and gradient for a member set; throws if a variable leaves its interval.
Evaluation objective_and_gradient(const Network &net, const PerturbationSpec &spec,
                                  const LayerBounds &bounds, std::size_t layer,
                                  const std::vector<std::size_t> &neurons, Side sense,
                                  const VariableVector &vars);

struct OptimizationResult
{
    /// Iterate with the best summed objective.
    VariableVector best;
    double bestObjective = 0.0;
    /// Per member, the best gamma seen at any iterate (each one is sound).
    std::vector<double> gammas;
    std::vector<AffineBound> bounds;
    /// gammas at the CROWN initialization.
    std::vector<double> initialGammas;
    int iterations = 0;
};

/// Projected gradient ascent on the lower bound (descent on the upper bound)
/// from the CROWN initialization, keeping the best iterate.
OptimizationResult optimize_bounds(const Objective &objective, const OptimizerConfig &config);

OptimizationResult optimize_bounds(const Network &net, const PerturbationSpec &spec,
                                   const LayerBounds &bounds, std::size_t layer,
                                   const std::vector<std::size_t> &neurons, Side sense,
                                   const OptimizerConfig &config);

struct Result
{
    LayerBounds bounds;
    std::vector<AffineBound> outputLower;
    std::vector<AffineBound> outputUpper;
    /// The plain CROWN pass the optimized bounds are intersected with.
    crown::Result reference;
    long long iterations = 0;
};

/// Layer by layer: optimize every group of neurons for both senses, then
/// refresh the layer bounds before moving on.
Result frown_propagate(const Network &net, const PerturbationSpec &spec, const OptimizerConfig &config);

} // namespace frown::tighten
