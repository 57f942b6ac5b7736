#include "frown/lp.hpp"

#include "frown/parallel.hpp"

#include <algorithm>

namespace frown::lp {

RelaxationMenu RelaxationMenu::single()
{
    return RelaxationMenu{};
}

RelaxationMenu RelaxationMenu::multi()
{
    RelaxationMenu menu;
    menu.reluLower = {LineTag::Slope0, LineTag::Slope1};
    menu.reluUpper = {LineTag::Default};
    menu.smoothLower = {LineTag::Default, LineTag::Chord, LineTag::TangentL, LineTag::TangentU};
    menu.smoothUpper = menu.smoothLower;
    return menu;
}

std::vector<Line> RelaxationMenu::lines(Activation act, Side side, double l, double u) const
{
    const relax::LineSpace space = relax::line_space(act, side, l, u);
    const bool relu = act == Activation::Relu;
    const std::vector<LineTag> &tags =
        relu ? (side == Side::Lower ? reluLower : reluUpper) : (side == Side::Lower ? smoothLower : smoothUpper);

    auto defaultLine = [&] {
        if (space.isFixed())
            return space.generate(0.0);
        crown::ChoiceSite site;
        site.side = side;
        site.l = l;
        site.u = u;
        return space.generate(space.clamp(crown::default_choice(space, site)));
    };

    std::vector<Line> result;
    auto add = [&](const Line &line) {
        if (std::find(result.begin(), result.end(), line) == result.end())
            result.push_back(line);
    };
    for (const LineTag tag : tags) {
        switch (tag) {
        case LineTag::Default: add(defaultLine()); break;
        case LineTag::Chord:
            if (space.isFixed())
                add(space.generate(0.0));
            break;
        case LineTag::TangentL:
            if (!relu && !space.isFixed() && space.contains(l))
                add(space.generate(l));
            break;
        case LineTag::TangentU:
            if (!relu && !space.isFixed() && space.contains(u))
                add(space.generate(u));
            break;
        case LineTag::Slope0:
        case LineTag::Slope1:
            if (relu && side == Side::Lower)
                add(space.isFixed() ? space.generate(0.0) : space.generate(tag == LineTag::Slope0 ? 0.0 : 1.0));
            break;
        }
    }
    if (result.empty())
        add(defaultLine());
    return result;
}

LineMenu menu_lines(const Network &net, const LayerBounds &bounds, std::size_t layers, const RelaxationMenu &menu)
{
    LineMenu result(layers);
    for (std::size_t v = 0; v < layers; ++v) {
        const Vector &l = bounds.lower.at(v);
        const Vector &u = bounds.upper.at(v);
        result[v].resize(static_cast<std::size_t>(l.size()));
        for (Eigen::Index j = 0; j < l.size(); ++j) {
            result[v][static_cast<std::size_t>(j)][0] = menu.lines(net.activation(), Side::Lower, l[j], u[j]);
            result[v][static_cast<std::size_t>(j)][1] = menu.lines(net.activation(), Side::Upper, l[j], u[j]);
        }
    }
    return result;
}

LineMenu single_lines(const crown::LineSet &lines)
{
    LineMenu result(lines.layers.size());
    for (std::size_t v = 0; v < lines.layers.size(); ++v) {
        result[v].resize(lines.layers[v].size());
        for (std::size_t j = 0; j < lines.layers[v].size(); ++j) {
            result[v][j][0] = {lines.layers[v][j].lower};
            result[v][j][1] = {lines.layers[v][j].upper};
        }
    }
    return result;
}

Layout layout(const Network &net, const PerturbationSpec &spec, std::size_t layer)
{
    Layout result;
    std::size_t next = net.inputSize();
    for (std::size_t v = 0; v < layer; ++v) {
        result.z.push_back(next);
        next += net.width(v);
        result.a.push_back(next);
        next += net.width(v);
    }
    result.auxiliary = next;
    (void)spec;
    return result;
}

Vector assignment_at(const Network &net, const PerturbationSpec &spec, std::size_t layer, const Vector &x)
{
    const Layout vars = layout(net, spec, layer);
    const std::size_t count = vars.auxiliary + (spec.p == Norm::L1 ? net.inputSize() : 0);
    Vector point = Vector::Zero(static_cast<Eigen::Index>(count));
    point.head(x.size()) = x;
    const std::vector<Vector> z = net.preActivations(x);
    for (std::size_t v = 0; v < layer; ++v) {
        point.segment(static_cast<Eigen::Index>(vars.z[v]), z[v].size()) = z[v];
        point.segment(static_cast<Eigen::Index>(vars.a[v]), z[v].size()) = activate(net.activation(), z[v]);
    }
    if (spec.p == Norm::L1)
        point.tail(x.size()) = (x - spec.x0).cwiseAbs();
    return point;
}

LpProblem build_lp(const Network &net, const PerturbationSpec &spec, std::size_t layer, std::size_t neuron,
                   Side sense, const LayerBounds &bounds, const LineMenu &lines)
{
    if (spec.p == Norm::L2)
        throw UnsupportedError("the LP relaxation needs a polyhedral ball (p = 1 or inf), got p = 2");
    spec.validate(net.inputSize());
    if (layer >= net.depth() || neuron >= net.width(layer))
        throw ShapeError("build_lp: target out of range");
    if (lines.size() < layer)
        throw Error("build_lp: lines missing for layer " + std::to_string(lines.size()));

    const std::size_t n = net.inputSize();
    LpProblem problem;
    for (std::size_t j = 0; j < n; ++j)
        problem.addVariable("x" + std::to_string(j));
    for (std::size_t v = 0; v < layer; ++v) {
        for (std::size_t j = 0; j < net.width(v); ++j)
            problem.addVariable("z" + std::to_string(v) + "_" + std::to_string(j));
        for (std::size_t j = 0; j < net.width(v); ++j)
            problem.addVariable("a" + std::to_string(v) + "_" + std::to_string(j));
    }
    const Layout vars = layout(net, spec, layer);

    for (std::size_t v = 0; v < layer; ++v) {
        const Layer &affine = net.layer(v);
        const std::size_t below = v == 0 ? 0 : vars.a[v - 1];
        const std::string tag = std::to_string(v) + "_";
        for (std::size_t j = 0; j < net.width(v); ++j) {
            const auto row = static_cast<Eigen::Index>(j);
            const int z = static_cast<int>(vars.z[v] + j);
            const int a = static_cast<int>(vars.a[v] + j);

            std::vector<std::pair<int, double>> terms{{z, 1.0}};
            for (Eigen::Index c = 0; c < affine.weights.cols(); ++c)
                if (affine.weights(row, c) != 0.0)
                    terms.emplace_back(static_cast<int>(below + static_cast<std::size_t>(c)), -affine.weights(row, c));
            problem.addRow(std::move(terms), RowType::Eq, affine.bias[row], "aff" + tag + std::to_string(j));

            // a - s z >= t (lower lines), a - s z <= t (upper lines)
            for (int side = 0; side < 2; ++side) {
                const auto &candidates = lines[v].at(j)[static_cast<std::size_t>(side)];
                if (candidates.empty())
                    throw Error("build_lp: no bounding line for layer " + std::to_string(v));
                for (std::size_t c = 0; c < candidates.size(); ++c)
                    problem.addRow({{a, 1.0}, {z, -candidates[c].slope}}, side == 0 ? RowType::Ge : RowType::Le,
                                   candidates[c].intercept,
                                   (side == 0 ? "lo" : "up") + tag + std::to_string(j) + "_" + std::to_string(c));
            }

            problem.addRow({{z, 1.0}}, RowType::Ge, bounds.lower.at(v)[row], "zl" + tag + std::to_string(j));
            problem.addRow({{z, 1.0}}, RowType::Le, bounds.upper.at(v)[row], "zu" + tag + std::to_string(j));
        }
    }

    if (spec.p == Norm::Linf) {
        for (std::size_t j = 0; j < n; ++j) {
            const double center = spec.x0[static_cast<Eigen::Index>(j)];
            problem.addRow({{static_cast<int>(j), 1.0}}, RowType::Ge, center - spec.epsilon, "bl" + std::to_string(j));
            problem.addRow({{static_cast<int>(j), 1.0}}, RowType::Le, center + spec.epsilon, "bu" + std::to_string(j));
        }
    } else {
        std::vector<std::pair<int, double>> budget;
        for (std::size_t j = 0; j < n; ++j) {
            const int r = problem.addVariable("r" + std::to_string(j));
            const double center = spec.x0[static_cast<Eigen::Index>(j)];
            problem.addRow({{r, 1.0}, {static_cast<int>(j), -1.0}}, RowType::Ge, -center, "rp" + std::to_string(j));
            problem.addRow({{r, 1.0}, {static_cast<int>(j), 1.0}}, RowType::Ge, center, "rn" + std::to_string(j));
            budget.emplace_back(r, 1.0);
        }
        problem.addRow(std::move(budget), RowType::Le, spec.epsilon, "budget");
    }

    const Layer &target = net.layer(layer);
    const std::size_t below = layer == 0 ? 0 : vars.a[layer - 1];
    for (Eigen::Index c = 0; c < target.weights.cols(); ++c)
        problem.objective[below + static_cast<std::size_t>(c)] = target.weights(static_cast<Eigen::Index>(neuron), c);
    problem.objectiveConstant = target.bias[static_cast<Eigen::Index>(neuron)];
    problem.maximize = sense == Side::Upper;
    return problem;
}

LpProblem build_lp(const Network &net, const PerturbationSpec &spec, std::size_t layer, std::size_t neuron,
                   Side sense, const LayerBounds &bounds, const RelaxationMenu &menu)
{
    return build_lp(net, spec, layer, neuron, sense, bounds, menu_lines(net, bounds, layer, menu));
}

Result lp_propagate(const Network &net, const PerturbationSpec &spec, const RelaxationMenu &menu, Mode mode)
{
    if (spec.p == Norm::L2)
        throw UnsupportedError("the LP relaxation needs a polyhedral ball (p = 1 or inf), got p = 2");
    spec.validate(net.inputSize());

    crown::Result imported;
    LineMenu importedLines;
    if (mode == Mode::CrownLines) {
        imported = crown::propagate(net, spec, crown::Mode::SelfConsistent);
        importedLines = single_lines(imported.lines);
    }

    Result result;
    const std::size_t depth = net.depth();
    for (std::size_t k = 0; k < depth; ++k) {
        const std::size_t width = net.width(k);
        Vector lower(static_cast<Eigen::Index>(width));
        Vector upper(static_cast<Eigen::Index>(width));
        if (k == 0) {
            for (std::size_t i = 0; i < width; ++i) {
                crown::AffineBound lo = crown::first_layer_bound(net, i, Side::Lower);
                crown::AffineBound hi = crown::first_layer_bound(net, i, Side::Upper);
                lower[static_cast<Eigen::Index>(i)] = crown::concretize(lo, spec);
                upper[static_cast<Eigen::Index>(i)] = crown::concretize(hi, spec);
            }
        } else {
            const LayerBounds &intervals = mode == Mode::CrownLines ? imported.bounds : result.bounds;
            const LineMenu lines = mode == Mode::CrownLines ? importedLines : menu_lines(net, result.bounds, k, menu);
            std::vector<double> values(2 * width);
            std::vector<long> iterations(2 * width, 0);
            parallel_for(2 * width, [&](std::size_t task) {
                const std::size_t i = task / 2;
                const Side sense = task % 2 == 0 ? Side::Lower : Side::Upper;
                const LpProblem problem = build_lp(net, spec, k, i, sense, intervals, lines);
                const Solution solution = solve(problem);
                values[task] = solution.value;
                iterations[task] = solution.iterations;
            });
            for (std::size_t i = 0; i < width; ++i) {
                lower[static_cast<Eigen::Index>(i)] = values[2 * i];
                upper[static_cast<Eigen::Index>(i)] = values[2 * i + 1];
            }
            for (const long count : iterations)
                result.iterations += count;
        }
        result.bounds.lower.push_back(std::move(lower));
        result.bounds.upper.push_back(std::move(upper));
    }
    result.outputLower = result.bounds.lower.back();
    result.outputUpper = result.bounds.upper.back();
    return result;
}

} // namespace frown::lp
