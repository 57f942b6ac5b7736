#include "frown/oracle.hpp"

#include "frown/parallel.hpp"
#include "frown/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace frown::oracle {

Vector sample_ball(const PerturbationSpec &spec, std::mt19937_64 &rng)
{
    const Eigen::Index n = spec.x0.size();
    if (spec.epsilon == 0.0 || n == 0)
        return spec.x0;

    Vector offset(n);
    switch (spec.p) {
    case Norm::Linf: {
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        for (Eigen::Index j = 0; j < n; ++j)
            offset[j] = uniform(rng);
        break;
    }
    case Norm::L1: {
        // First n coordinates of a flat Dirichlet over n+1 cells fill the
        // simplex uniformly; random signs reflect it into the whole ball.
        std::exponential_distribution<double> exponential(1.0);
        std::bernoulli_distribution coin(0.5);
        double sum = exponential(rng);
        for (Eigen::Index j = 0; j < n; ++j) {
            offset[j] = exponential(rng);
            sum += offset[j];
        }
        for (Eigen::Index j = 0; j < n; ++j)
            offset[j] = (coin(rng) ? 1.0 : -1.0) * offset[j] / sum;
        break;
    }
    case Norm::L2: {
        std::normal_distribution<double> gaussian(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        for (Eigen::Index j = 0; j < n; ++j)
            offset[j] = gaussian(rng);
        const double length = offset.norm();
        const double radius = std::pow(uniform(rng), 1.0 / static_cast<double>(n));
        offset *= length > 0.0 ? radius / length : 0.0;
        break;
    }
    }
    return spec.x0 + spec.epsilon * offset;
}

namespace {

constexpr std::size_t kChunk = 4096;

ViolationReport check(const Network &net, const PerturbationSpec &spec, const std::vector<Vector> &lower,
                      const std::vector<Vector> &upper, std::size_t firstLayer, std::size_t samples,
                      std::uint64_t seed)
{
    spec.validate(net.inputSize());
    ViolationReport report;
    report.samples = samples;
    std::mutex mutex;

    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t chunk) {
        std::seed_seq sequence{seed, static_cast<std::uint64_t>(chunk)};
        std::mt19937_64 rng(sequence);
        const std::size_t count = std::min(kChunk, samples - chunk * kChunk);
        std::size_t found = 0;
        std::vector<Violation> kept;
        for (std::size_t s = 0; s < count; ++s) {
            const Vector x = sample_ball(spec, rng);
            const std::vector<Vector> z = net.preActivations(x);
            for (std::size_t t = 0; t < lower.size(); ++t) {
                const std::size_t k = firstLayer + t;
                for (Eigen::Index i = 0; i < z[k].size(); ++i) {
                    const double value = z[k][i];
                    const bool below = value < lower[t][i] - kSampleSlack;
                    const bool above = value > upper[t][i] + kSampleSlack;
                    if (!below && !above)
                        continue;
                    ++found;
                    if (kept.size() < ViolationReport::kKeptViolations)
                        kept.push_back({k, static_cast<std::size_t>(i), below ? Side::Lower : Side::Upper, value,
                                        below ? lower[t][i] : upper[t][i], x});
                }
            }
        }
        std::lock_guard lock(mutex);
        report.count += found;
        for (Violation &violation : kept)
            if (report.examples.size() < ViolationReport::kKeptViolations)
                report.examples.push_back(std::move(violation));
    });
    return report;
}

} // namespace

ViolationReport sample_check(const Network &net, const PerturbationSpec &spec, const LayerBounds &claimed,
                             std::size_t samples, std::uint64_t seed)
{
    if (claimed.layers() > net.depth())
        throw ShapeError("claimed bounds cover more layers than the network has");
    return check(net, spec, claimed.lower, claimed.upper, 0, samples, seed);
}

ViolationReport sample_check(const Network &net, const PerturbationSpec &spec, const Vector &outputLower,
                             const Vector &outputUpper, std::size_t samples, std::uint64_t seed)
{
    return check(net, spec, {outputLower}, {outputUpper}, net.depth() - 1, samples, seed);
}

namespace {

/// g . x + h >= 0
struct HalfSpace
{
    Vector g;
    double h = 0.0;
};

class PatternSearch
{
public:
    PatternSearch(const Network &net, const PerturbationSpec &spec, const Vector &objective)
        : _net(net), _spec(spec), _objective(objective)
    {
    }

    ExactRange run()
    {
        _range.min = std::numeric_limits<double>::infinity();
        _range.max = -std::numeric_limits<double>::infinity();
        const Layer &first = _net.layer(0);
        descend(0, first.weights, first.bias, {});
        if (_range.patternsSearched == 0)
            throw SolverError("exact range: no feasible activation pattern");
        return _range;
    }

private:
    lp::LpProblem region(const std::vector<HalfSpace> &constraints) const
    {
        lp::LpProblem problem;
        const auto n = static_cast<std::size_t>(_spec.x0.size());
        for (std::size_t j = 0; j < n; ++j)
            problem.addVariable("x" + std::to_string(j));
        if (_spec.p == Norm::Linf) {
            for (std::size_t j = 0; j < n; ++j) {
                const double center = _spec.x0[static_cast<Eigen::Index>(j)];
                problem.addRow({{static_cast<int>(j), 1.0}}, lp::RowType::Ge, center - _spec.epsilon);
                problem.addRow({{static_cast<int>(j), 1.0}}, lp::RowType::Le, center + _spec.epsilon);
            }
        } else {
            std::vector<std::pair<int, double>> budget;
            for (std::size_t j = 0; j < n; ++j) {
                const int r = problem.addVariable("r" + std::to_string(j));
                const double center = _spec.x0[static_cast<Eigen::Index>(j)];
                problem.addRow({{r, 1.0}, {static_cast<int>(j), -1.0}}, lp::RowType::Ge, -center);
                problem.addRow({{r, 1.0}, {static_cast<int>(j), 1.0}}, lp::RowType::Ge, center);
                budget.emplace_back(r, 1.0);
            }
            problem.addRow(std::move(budget), lp::RowType::Le, _spec.epsilon);
        }
        for (const HalfSpace &half : constraints) {
            std::vector<std::pair<int, double>> terms;
            for (Eigen::Index j = 0; j < half.g.size(); ++j)
                if (half.g[j] != 0.0)
                    terms.emplace_back(static_cast<int>(j), half.g[j]);
            problem.addRow(std::move(terms), lp::RowType::Ge, -half.h);
        }
        return problem;
    }

    /// min or max of g . x + h over the region; empty when infeasible.
    std::optional<lp::Solution> optimize(const std::vector<HalfSpace> &constraints, const Vector &g, double h,
                                         bool maximize) const
    {
        lp::LpProblem problem = region(constraints);
        for (Eigen::Index j = 0; j < g.size(); ++j)
            problem.objective[static_cast<std::size_t>(j)] = g[j];
        problem.objectiveConstant = h;
        problem.maximize = maximize;
        try {
            return lp::solve(problem);
        } catch (const lp::InfeasibleError &) {
            return std::nullopt;
        }
    }

    /// Pre-activations of layer v are A x + c over the current region.
    void descend(std::size_t v, const Matrix &a, const Vector &c, const std::vector<HalfSpace> &constraints)
    {
        const auto n = static_cast<Eigen::Index>(_spec.x0.size());
        if (v + 1 == _net.depth()) {
            const Vector g = a.transpose() * _objective;
            const double h = _objective.dot(c);
            const auto low = optimize(constraints, g, h, false);
            const auto high = optimize(constraints, g, h, true);
            if (!low || !high)
                return;
            ++_range.patternsSearched;
            if (low->value < _range.min) {
                _range.min = low->value;
                _range.argmin = low->primal.head(n);
            }
            if (high->value > _range.max) {
                _range.max = high->value;
                _range.argmax = high->primal.head(n);
            }
            return;
        }

        // Neurons whose sign is fixed over the region need no case split.
        std::vector<int> fixedState(static_cast<std::size_t>(a.rows()), -1);
        std::vector<Eigen::Index> open;
        for (Eigen::Index j = 0; j < a.rows(); ++j) {
            const Vector g = a.row(j).transpose();
            const auto low = optimize(constraints, g, c[j], false);
            if (!low)
                return;
            if (low->value >= 0.0) {
                fixedState[static_cast<std::size_t>(j)] = 1;
                continue;
            }
            const auto high = optimize(constraints, g, c[j], true);
            if (high && high->value <= 0.0) {
                fixedState[static_cast<std::size_t>(j)] = 0;
                continue;
            }
            open.push_back(j);
        }

        const Layer &next = _net.layer(v + 1);
        const std::size_t patterns = std::size_t{1} << open.size();
        for (std::size_t pattern = 0; pattern < patterns; ++pattern) {
            std::vector<HalfSpace> region = constraints;
            Vector active(a.rows());
            for (Eigen::Index j = 0; j < a.rows(); ++j)
                active[j] = fixedState[static_cast<std::size_t>(j)] == 1 ? 1.0 : 0.0;
            for (std::size_t b = 0; b < open.size(); ++b) {
                const Eigen::Index j = open[b];
                const bool on = (pattern >> b) & 1U;
                active[j] = on ? 1.0 : 0.0;
                const double sign = on ? 1.0 : -1.0;
                region.push_back({sign * a.row(j).transpose(), sign * c[j]});
            }
            if (!open.empty() && !optimize(region, Vector::Zero(n), 0.0, false))
                continue;
            const Matrix masked = active.asDiagonal() * a;
            const Vector maskedOffset = active.cwiseProduct(c);
            descend(v + 1, next.weights * masked, next.weights * maskedOffset + next.bias, region);
        }
    }

    const Network &_net;
    const PerturbationSpec &_spec;
    Vector _objective;
    ExactRange _range;
};

} // namespace

ExactRange exact_relu_range(const Network &net, const PerturbationSpec &spec, const Vector &objective)
{
    if (net.activation() != Activation::Relu)
        throw UnsupportedError("exact ranges are only available for relu networks");
    if (net.hiddenNeurons() > kMaxExactHidden)
        throw UnsupportedError("exact range enumeration is capped at " + std::to_string(kMaxExactHidden) +
                               " hidden neurons, network has " + std::to_string(net.hiddenNeurons()));
    if (spec.p == Norm::L2)
        throw UnsupportedError("exact ranges need p = 1 or inf");
    spec.validate(net.inputSize());
    if (static_cast<std::size_t>(objective.size()) != net.outputSize())
        throw ShapeError("objective length does not match the output size");
    return PatternSearch(net, spec, objective).run();
}

ExactRange exact_relu_range(const Network &net, const PerturbationSpec &spec, std::size_t outputNeuron)
{
    if (outputNeuron >= net.outputSize())
        throw ShapeError("output neuron out of range");
    Vector objective = Vector::Zero(static_cast<Eigen::Index>(net.outputSize()));
    objective[static_cast<Eigen::Index>(outputNeuron)] = 1.0;
    return exact_relu_range(net, spec, objective);
}

DistortionBracket minimal_adversarial_distortion(const Network &net, const Vector &x0, std::size_t label, Norm p,
                                                 std::optional<std::size_t> target, double relTol, double cap)
{
    const std::size_t classes = net.outputSize();
    if (label >= classes || (target && (*target >= classes || *target == label)))
        throw Error("invalid label or target");

    auto worstMargin = [&](double epsilon) {
        const PerturbationSpec spec(x0, p, epsilon);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < classes; ++j) {
            if (j == label || (target && j != *target))
                continue;
            Vector objective = Vector::Zero(static_cast<Eigen::Index>(classes));
            objective[static_cast<Eigen::Index>(label)] = 1.0;
            objective[static_cast<Eigen::Index>(j)] = -1.0;
            worst = std::min(worst, exact_relu_range(net, spec, objective).min);
        }
        return worst;
    };

    DistortionBracket bracket;
    if (worstMargin(0.0) < 0.0)
        return bracket;

    double epsilon = 1e-3;
    if (worstMargin(epsilon) < 0.0) {
        bracket.hi = epsilon;
        for (int halving = 0; halving < 40; ++halving) {
            epsilon *= 0.5;
            if (worstMargin(epsilon) >= 0.0) {
                bracket.lo = epsilon;
                break;
            }
            bracket.hi = epsilon;
        }
        if (bracket.lo == 0.0)
            return bracket;
    } else {
        bracket.lo = epsilon;
        while (true) {
            const double next = std::min(2.0 * bracket.lo, cap);
            if (worstMargin(next) < 0.0) {
                bracket.hi = next;
                break;
            }
            bracket.lo = next;
            if (next >= cap) {
                bracket.hi = cap;
                bracket.capped = true;
                return bracket;
            }
        }
    }

    while ((bracket.hi - bracket.lo) > relTol * bracket.lo) {
        const double mid = 0.5 * (bracket.lo + bracket.hi);
        (worstMargin(mid) < 0.0 ? bracket.hi : bracket.lo) = mid;
    }
    return bracket;
}

} // namespace frown::oracle
