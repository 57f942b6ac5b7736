#include "frown/tighten.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace frown::tighten {

std::vector<double> VariableVector::values() const
{
    std::vector<double> result;
    result.reserve(entries.size());
    for (const Variable &entry : entries)
        result.push_back(entry.value);
    return result;
}

void VariableVector::assign(const std::vector<double> &values)
{
    if (values.size() != entries.size())
        throw Error("variable count mismatch");
    for (std::size_t e = 0; e < entries.size(); ++e)
        entries[e].value = values[e];
}

void OptimizerConfig::validate() const
{
    if (!(stepSize > 0.0))
        throw Error("step size must be positive");
    if (maxIters < 1)
        throw Error("max iterations must be at least 1");
    if (restarts < 1)
        throw Error("restarts must be at least 1");
    if (groupSize < 1)
        throw Error("group size must be at least 1");
}

Objective::Objective(const Network &net, const PerturbationSpec &spec, const LayerBounds &bounds,
                     std::size_t layer, std::vector<std::size_t> neurons, Side sense)
    : _net(net), _spec(spec), _layer(layer), _neurons(std::move(neurons)), _sense(sense)
{
    if (layer >= net.depth())
        throw ShapeError("layer index out of range");
    for (const std::size_t i : _neurons)
        if (i >= net.width(layer))
            throw ShapeError("neuron index out of range");

    _spaces = crown::line_spaces(net, bounds, layer);
    _index.resize(layer);
    for (std::size_t v = 0; v < layer; ++v) {
        _index[v].resize(_spaces[v].size());
        for (std::size_t j = 0; j < _spaces[v].size(); ++j) {
            for (const Side side : {Side::Lower, Side::Upper}) {
                const relax::LineSpace &space = side == Side::Lower ? _spaces[v][j].lower : _spaces[v][j].upper;
                int &slot = _index[v][j][side == Side::Lower ? 0 : 1];
                slot = -1;
                if (space.isFixed())
                    continue;
                crown::ChoiceSite site;
                site.layer = v;
                site.neuron = j;
                site.side = side;
                site.l = bounds.lower[v][static_cast<Eigen::Index>(j)];
                site.u = bounds.upper[v][static_cast<Eigen::Index>(j)];
                slot = static_cast<int>(_initial.entries.size());
                _initial.entries.push_back(
                    {v, j, side, space.clamp(crown::default_choice(space, site)), space.lo(), space.hi()});
            }
        }
    }
}

crown::LineSet Objective::lines(const VariableVector &vars) const
{
    if (vars.size() != _initial.size())
        throw Error("variable vector does not match the objective");
    crown::LineSet lines;
    lines.layers.resize(_layer);
    for (std::size_t v = 0; v < _layer; ++v) {
        lines.layers[v].resize(_spaces[v].size());
        for (std::size_t j = 0; j < _spaces[v].size(); ++j) {
            const int lo = _index[v][j][0];
            const int hi = _index[v][j][1];
            lines.layers[v][j].lower = _spaces[v][j].lower.generate(lo < 0 ? 0.0 : vars.entries[lo].value);
            lines.layers[v][j].upper = _spaces[v][j].upper.generate(hi < 0 ? 0.0 : vars.entries[hi].value);
        }
    }
    return lines;
}

namespace {

/// Subgradient of ||c||_q.
Vector norm_subgradient(const Vector &c, Norm q)
{
    Vector g = Vector::Zero(c.size());
    switch (q) {
    case Norm::L1:
        for (Eigen::Index j = 0; j < c.size(); ++j)
            g[j] = c[j] > 0.0 ? 1.0 : (c[j] < 0.0 ? -1.0 : 0.0);
        break;
    case Norm::L2: {
        const double length = c.norm();
        if (length > 0.0)
            g = c / length;
        break;
    }
    case Norm::Linf:
        if (c.size() > 0) {
            Eigen::Index best = 0;
            c.cwiseAbs().maxCoeff(&best);
            g[best] = c[best] > 0.0 ? 1.0 : (c[best] < 0.0 ? -1.0 : 0.0);
        }
        break;
    }
    return g;
}

} // namespace

Evaluation Objective::evaluate(const VariableVector &vars) const
{
    if (vars.size() != _initial.size())
        throw Error("variable vector does not match the objective");
    for (const Variable &entry : vars.entries)
        if (!(entry.value >= entry.lo && entry.value <= entry.hi))
            throw Error("variable outside its admissible interval");

    const crown::LineSet lines = this->lines(vars);

    Evaluation out;
    out.gradient.assign(vars.size(), 0.0);
    const double sign = _sense == Side::Lower ? -1.0 : 1.0;

    // Per unwrap step v (top down) the incoming row over a(v) and which line
    // each neuron used.
    std::vector<Vector> rows(_layer);
    std::vector<std::vector<char>> usedLower(_layer);

    for (const std::size_t neuron : _neurons) {
        const Layer &top = _net.layer(_layer);
        Vector row = top.weights.row(static_cast<Eigen::Index>(neuron)).transpose();
        double offset = top.bias[static_cast<Eigen::Index>(neuron)];

        for (std::size_t v = _layer; v-- > 0;) {
            rows[v] = row;
            usedLower[v].assign(static_cast<std::size_t>(row.size()), 0);
            Vector scaled(row.size());
            for (Eigen::Index j = 0; j < row.size(); ++j) {
                const double lambda = row[j];
                const bool lower = (lambda >= 0.0) == (_sense == Side::Lower);
                usedLower[v][static_cast<std::size_t>(j)] = lower;
                const relax::Line &line = lower ? lines.layers[v][j].lower : lines.layers[v][j].upper;
                offset += lambda * line.intercept;
                scaled[j] = lambda * line.slope;
            }
            const Layer &below = _net.layer(v);
            offset += scaled.dot(below.bias);
            row = below.weights.transpose() * scaled;
        }

        crown::AffineBound bound;
        bound.coeffs = row;
        bound.offset = offset;
        bound.sense = _sense;
        out.gammas.push_back(crown::concretize(bound, _spec));
        out.bounds.push_back(std::move(bound));

        // Reverse sweep: grad holds d(gamma)/d(row over the layer below).
        Vector grad = _spec.x0 + sign * _spec.epsilon * norm_subgradient(row, _spec.q());
        for (std::size_t v = 0; v < _layer; ++v) {
            const Layer &below = _net.layer(v);
            const Vector gradScaled = below.weights * grad + below.bias;
            const Vector &lambda = rows[v];
            Vector next(lambda.size());
            for (Eigen::Index j = 0; j < lambda.size(); ++j) {
                const bool lower = usedLower[v][static_cast<std::size_t>(j)];
                const relax::Line &line = lower ? lines.layers[v][j].lower : lines.layers[v][j].upper;
                next[j] = gradScaled[j] * line.slope + line.intercept;
                const int slot = _index[v][static_cast<std::size_t>(j)][lower ? 0 : 1];
                if (slot < 0)
                    continue;
                const relax::LineSpace &space = lower ? _spaces[v][j].lower : _spaces[v][j].upper;
                const relax::Line d = space.generateDerivative(vars.entries[slot].value);
                out.gradient[static_cast<std::size_t>(slot)] +=
                    gradScaled[j] * lambda[j] * d.slope + lambda[j] * d.intercept;
            }
            grad = std::move(next);
        }
    }
    return out;
}

Evaluation objective_and_gradient(const Network &net, const PerturbationSpec &spec,
                                  const LayerBounds &bounds, std::size_t layer,
                                  const std::vector<std::size_t> &neurons, Side sense,
                                  const VariableVector &vars)
{
    const Objective objective(net, spec, bounds, layer, neurons, sense);
    return objective.evaluate(vars);
}

namespace {

double total(const std::vector<double> &values)
{
    return std::accumulate(values.begin(), values.end(), 0.0);
}

} // namespace

OptimizationResult optimize_bounds(const Objective &objective, const OptimizerConfig &config)
{
    config.validate();
    const double direction = objective.sense() == Side::Lower ? 1.0 : -1.0;

    OptimizationResult result;
    result.best = objective.initial();
    Evaluation current = objective.evaluate(result.best);
    result.initialGammas = current.gammas;
    result.gammas = current.gammas;
    result.bounds = current.bounds;
    result.bestObjective = total(current.gammas);
    if (result.best.size() == 0)
        return result;

    auto record = [&](const VariableVector &vars, const Evaluation &eval) {
        for (std::size_t m = 0; m < eval.gammas.size(); ++m) {
            if (direction * (eval.gammas[m] - result.gammas[m]) > 0.0) {
                result.gammas[m] = eval.gammas[m];
                result.bounds[m] = eval.bounds[m];
            }
        }
        const double sum = total(eval.gammas);
        if (direction * (sum - result.bestObjective) > 0.0) {
            result.bestObjective = sum;
            result.best = vars;
        }
    };

    std::mt19937_64 rng(config.seed);
    for (int restart = 0; restart < config.restarts; ++restart) {
        VariableVector vars = objective.initial();
        if (restart > 0) {
            for (Variable &entry : vars.entries)
                entry.value = std::uniform_real_distribution<double>(entry.lo, entry.hi)(rng);
            current = objective.evaluate(vars);
            record(vars, current);
        }

        std::vector<double> history{direction * result.bestObjective};
        for (int iter = 0; iter < config.maxIters; ++iter) {
            double largest = 0.0;
            for (const double g : current.gradient)
                largest = std::max(largest, std::abs(g));
            if (largest == 0.0)
                break;

            for (std::size_t e = 0; e < vars.size(); ++e) {
                Variable &entry = vars.entries[e];
                const double step = config.stepSize * (entry.hi - entry.lo) * current.gradient[e] / largest;
                entry.value = std::clamp(entry.value + direction * step, entry.lo, entry.hi);
            }
            current = objective.evaluate(vars);
            record(vars, current);
            ++result.iterations;

            history.push_back(direction * result.bestObjective);
            const std::size_t n = history.size();
            if (n > 5 && history[n - 1] - history[n - 6] < config.improvementTol)
                break;
        }
    }
    return result;
}

OptimizationResult optimize_bounds(const Network &net, const PerturbationSpec &spec,
                                   const LayerBounds &bounds, std::size_t layer,
                                   const std::vector<std::size_t> &neurons, Side sense,
                                   const OptimizerConfig &config)
{
    const Objective objective(net, spec, bounds, layer, neurons, sense);
    return optimize_bounds(objective, config);
}

Result frown_propagate(const Network &net, const PerturbationSpec &spec, const OptimizerConfig &config)
{
    config.validate();
    spec.validate(net.inputSize());

    Result result;
    result.reference = crown::propagate(net, spec);
    const crown::LayerBounds &reference = result.reference.bounds;
    const std::size_t depth = net.depth();

    result.bounds.lower = {reference.lower[0]};
    result.bounds.upper = {reference.upper[0]};

    for (std::size_t k = 1; k < depth; ++k) {
        const std::size_t width = net.width(k);
        Vector lower(static_cast<Eigen::Index>(width));
        Vector upper(static_cast<Eigen::Index>(width));
        std::vector<AffineBound> lowerBounds(width);
        std::vector<AffineBound> upperBounds(width);

        for (std::size_t start = 0; start < width; start += config.groupSize) {
            std::vector<std::size_t> group;
            for (std::size_t i = start; i < std::min(width, start + config.groupSize); ++i)
                group.push_back(i);

            for (const Side sense : {Side::Lower, Side::Upper}) {
                OptimizerConfig local = config;
                local.seed = config.seed ^ (k * 1000003ULL + start * 7919ULL + (sense == Side::Lower ? 0 : 1));
                const Objective objective(net, spec, result.bounds, k, group, sense);
                const OptimizationResult optimized = optimize_bounds(objective, local);
                result.iterations += optimized.iterations;

                for (std::size_t m = 0; m < group.size(); ++m) {
                    const auto i = static_cast<Eigen::Index>(group[m]);
                    const bool isLower = sense == Side::Lower;
                    const double fallback = isLower ? reference.lower[k][i] : reference.upper[k][i];
                    const double optimizedGamma = optimized.gammas[m];
                    const bool keepOptimized = isLower ? optimizedGamma >= fallback : optimizedGamma <= fallback;
                    const AffineBound &chosen =
                        keepOptimized ? optimized.bounds[m]
                                      : (k + 1 == depth ? (isLower ? result.reference.outputLower[group[m]]
                                                                   : result.reference.outputUpper[group[m]])
                                                        : optimized.bounds[m]);
                    (isLower ? lower : upper)[i] = keepOptimized ? optimizedGamma : fallback;
                    (isLower ? lowerBounds : upperBounds)[group[m]] = chosen;
                }
            }
        }

        result.bounds.lower.push_back(std::move(lower));
        result.bounds.upper.push_back(std::move(upper));
        if (k + 1 == depth) {
            result.outputLower = std::move(lowerBounds);
            result.outputUpper = std::move(upperBounds);
        }
    }
    return result;
}

} // namespace frown::tighten
