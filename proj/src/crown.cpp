#include "frown/crown.hpp"

#include <cmath>

namespace frown::crown {

AffineBound first_layer_bound(const Network &net, std::size_t neuron, Side sense)
{
    const Layer &first = net.layer(0);
    AffineBound bound;
    bound.coeffs = first.weights.row(static_cast<Eigen::Index>(neuron)).transpose();
    bound.offset = first.bias[static_cast<Eigen::Index>(neuron)];
    bound.sense = sense;
    return bound;
}

AffineBound backward_bound(const Network &net, std::size_t layer, std::size_t neuron,
                           const LineSet &lines, Side sense)
{
    if (layer == 0)
        return first_layer_bound(net, neuron, sense);
    if (layer >= net.depth())
        throw ShapeError("layer index out of range");
    if (lines.layers.size() < layer)
        throw Error("backward_bound: lines missing for layer " + std::to_string(lines.layers.size()));

    const Layer &top = net.layer(layer);
    Vector row = top.weights.row(static_cast<Eigen::Index>(neuron)).transpose();
    double offset = top.bias[static_cast<Eigen::Index>(neuron)];

    for (std::size_t v = layer; v-- > 0;) {
        const auto &layerLines = lines.layers[v];
        if (layerLines.size() != static_cast<std::size_t>(row.size()))
            throw Error("backward_bound: line count mismatch at layer " + std::to_string(v));
        Vector scaled(row.size());
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            const double lambda = row[j];
            const bool useLower = (lambda >= 0.0) == (sense == Side::Lower);
            const Line &line = useLower ? layerLines[j].lower : layerLines[j].upper;
            offset += lambda * line.intercept;
            scaled[j] = lambda * line.slope;
        }
        const Layer &below = net.layer(v);
        offset += scaled.dot(below.bias);
        row = below.weights.transpose() * scaled;
    }

    AffineBound bound;
    bound.coeffs = std::move(row);
    bound.offset = offset;
    bound.sense = sense;
    return bound;
}

double concretize(AffineBound &bound, const PerturbationSpec &spec)
{
    if (bound.coeffs.size() != spec.x0.size())
        throw ShapeError("concretize: coefficient length does not match x0");
    const double radius = spec.epsilon * norm(bound.coeffs, spec.q());
    const double center = bound.coeffs.dot(spec.x0) + bound.offset;
    bound.gamma = bound.sense == Side::Lower ? center - radius : center + radius;
    return bound.gamma;
}

Vector dual_maximizer(const Vector &coeffs, const PerturbationSpec &spec, Side sense)
{
    // Direction d with ||d||_p <= 1 maximizing coeffs . d; negated for a lower bound.
    Vector direction = Vector::Zero(coeffs.size());
    switch (spec.p) {
    case Norm::Linf:
        for (Eigen::Index j = 0; j < coeffs.size(); ++j)
            direction[j] = coeffs[j] > 0.0 ? 1.0 : (coeffs[j] < 0.0 ? -1.0 : 0.0);
        break;
    case Norm::L2: {
        const double length = coeffs.norm();
        if (length > 0.0)
            direction = coeffs / length;
        break;
    }
    case Norm::L1: {
        if (coeffs.size() > 0) {
            Eigen::Index best = 0;
            coeffs.cwiseAbs().maxCoeff(&best);
            direction[best] = coeffs[best] >= 0.0 ? 1.0 : -1.0;
        }
        break;
    }
    }
    const double sign = sense == Side::Upper ? 1.0 : -1.0;
    return spec.x0 + sign * spec.epsilon * direction;
}

double default_choice(const relax::LineSpace &space, const ChoiceSite &site)
{
    if (space.activation() == Activation::Relu)
        return site.u >= std::abs(site.l) ? space.hi() : space.lo();
    return 0.5 * (space.lo() + space.hi());
}

std::vector<std::vector<NeuronSpaces>> line_spaces(const Network &net, const LayerBounds &bounds,
                                                   std::size_t layerCount)
{
    std::vector<std::vector<NeuronSpaces>> spaces(layerCount);
    for (std::size_t v = 0; v < layerCount; ++v) {
        const Vector &l = bounds.lower.at(v);
        const Vector &u = bounds.upper.at(v);
        spaces[v].reserve(static_cast<std::size_t>(l.size()));
        for (Eigen::Index j = 0; j < l.size(); ++j)
            spaces[v].push_back({relax::line_space(net.activation(), Side::Lower, l[j], u[j]),
                                 relax::line_space(net.activation(), Side::Upper, l[j], u[j])});
    }
    return spaces;
}

namespace {

Line pick(const relax::LineSpace &space, ChoiceSite site, const LineChooser &chooser)
{
    if (space.isFixed())
        return space.generate(0.0);
    return space.generate(space.clamp(chooser(space, site)));
}

} // namespace

LineSet choose_lines(const Network &net, const LayerBounds &bounds, std::size_t layerCount,
                     const LineChooser &chooser, const ChoiceSite &target)
{
    LineSet lines;
    lines.layers.resize(layerCount);
    for (std::size_t v = 0; v < layerCount; ++v) {
        const Vector &l = bounds.lower.at(v);
        const Vector &u = bounds.upper.at(v);
        lines.layers[v].resize(static_cast<std::size_t>(l.size()));
        for (Eigen::Index j = 0; j < l.size(); ++j) {
            ChoiceSite site = target;
            site.layer = v;
            site.neuron = static_cast<std::size_t>(j);
            site.l = l[j];
            site.u = u[j];
            NeuronLines &neuron = lines.layers[v][static_cast<std::size_t>(j)];
            site.side = Side::Lower;
            neuron.lower = pick(relax::line_space(net.activation(), Side::Lower, l[j], u[j]), site, chooser);
            site.side = Side::Upper;
            neuron.upper = pick(relax::line_space(net.activation(), Side::Upper, l[j], u[j]), site, chooser);
        }
    }
    return lines;
}

namespace {

/// Lines for the next hidden layer appended to an existing set.
void extend_lines(LineSet &lines, const Network &net, const LayerBounds &bounds, const LineChooser &chooser)
{
    const std::size_t v = lines.layers.size();
    LayerBounds single;
    single.lower = {bounds.lower.at(v)};
    single.upper = {bounds.upper.at(v)};
    LineSet next = choose_lines(net, single, 1, [&](const relax::LineSpace &space, ChoiceSite site) {
        site.layer = v;
        return chooser(space, site);
    });
    lines.layers.push_back(std::move(next.layers.front()));
}

} // namespace

Result propagate(const Network &net, const PerturbationSpec &spec, Mode mode, const LineChooser &chooser)
{
    spec.validate(net.inputSize());

    Result result;
    const std::size_t depth = net.depth();
    result.bounds.lower.resize(depth);
    result.bounds.upper.resize(depth);
    if (mode == Mode::PerNeuron)
        result.perNeuron.resize(depth);

    for (std::size_t k = 0; k < depth; ++k) {
        const auto width = static_cast<Eigen::Index>(net.width(k));
        Vector lower(width);
        Vector upper(width);
        if (k > 0 && mode == Mode::SelfConsistent)
            extend_lines(result.lines, net, result.bounds, chooser);
        if (k > 0 && mode == Mode::PerNeuron)
            result.perNeuron[k].resize(static_cast<std::size_t>(width));

        for (Eigen::Index i = 0; i < width; ++i) {
            AffineBound lo;
            AffineBound hi;
            if (k == 0) {
                lo = first_layer_bound(net, static_cast<std::size_t>(i), Side::Lower);
                hi = first_layer_bound(net, static_cast<std::size_t>(i), Side::Upper);
            } else if (mode == Mode::SelfConsistent) {
                lo = backward_bound(net, k, static_cast<std::size_t>(i), result.lines, Side::Lower);
                hi = backward_bound(net, k, static_cast<std::size_t>(i), result.lines, Side::Upper);
            } else {
                TargetLines &own = result.perNeuron[k][static_cast<std::size_t>(i)];
                ChoiceSite target;
                target.targetLayer = k;
                target.targetNeuron = static_cast<std::size_t>(i);
                target.targetSense = Side::Lower;
                own.lower = choose_lines(net, result.bounds, k, chooser, target);
                target.targetSense = Side::Upper;
                own.upper = choose_lines(net, result.bounds, k, chooser, target);
                lo = backward_bound(net, k, static_cast<std::size_t>(i), own.lower, Side::Lower);
                hi = backward_bound(net, k, static_cast<std::size_t>(i), own.upper, Side::Upper);
            }
            lower[i] = concretize(lo, spec);
            upper[i] = concretize(hi, spec);
            if (k + 1 == depth) {
                result.outputLower.push_back(std::move(lo));
                result.outputUpper.push_back(std::move(hi));
            }
        }
        result.bounds.lower[k] = std::move(lower);
        result.bounds.upper[k] = std::move(upper);
    }
    return result;
}

std::vector<double> margins(const Vector &outputLower, const Vector &outputUpper, std::size_t label)
{
    if (label >= static_cast<std::size_t>(outputLower.size()))
        throw Error("label " + std::to_string(label) + " out of range");
    std::vector<double> result;
    for (Eigen::Index j = 0; j < outputUpper.size(); ++j)
        if (static_cast<std::size_t>(j) != label)
            result.push_back(outputLower[static_cast<Eigen::Index>(label)] - outputUpper[j]);
    return result;
}

} // namespace frown::crown
