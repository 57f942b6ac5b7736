#pragma once

// Ground truth for checking the bound engines: random falsification inside
// the ball, and exact output ranges of small relu networks.

#include "frown/crown.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace frown::oracle {

using crown::LayerBounds;
using relax::Side;

inline constexpr double kSampleSlack = 1e-7;

/// Uniform point of B_p(x0, epsilon).
Vector sample_ball(const PerturbationSpec &spec, std::mt19937_64 &rng);

struct Violation
{
    std::size_t layer = 0;
    std::size_t neuron = 0;
    Side side = Side::Lower;
    double value = 0.0;
    double bound = 0.0;
    Vector x;
};

struct ViolationReport
{
    std::size_t samples = 0;
    std::size_t count = 0;
    /// The first few violations found (at most kKeptViolations).
    std::vector<Violation> examples;

    static constexpr std::size_t kKeptViolations = 16;

    bool passed() const { return count == 0; }
};

/// Evaluates every pre-activation covered by `claimed` at `samples` points of
/// the ball and reports values outside the claimed bounds by more than kSampleSlack.
ViolationReport sample_check(const Network &net, const PerturbationSpec &spec, const LayerBounds &claimed,
                             std::size_t samples, std::uint64_t seed);

/// Output-only variant.
ViolationReport sample_check(const Network &net, const PerturbationSpec &spec, const Vector &outputLower,
                             const Vector &outputUpper, std::size_t samples, std::uint64_t seed);

struct ExactRange
{
    double min = 0.0;
    double max = 0.0;
    Vector argmin;
    Vector argmax;
    std::size_t patternsSearched = 0;
};

inline constexpr std::size_t kMaxExactHidden = 16;

/// Exact range of objective . F(x) over the ball for a relu network with at
/// most kMaxExactHidden hidden neurons and p in {1, inf}.
ExactRange exact_relu_range(const Network &net, const PerturbationSpec &spec, const Vector &objective);

ExactRange exact_relu_range(const Network &net, const PerturbationSpec &spec, std::size_t outputNeuron);

struct DistortionBracket
{
    /// No adversarial point within radius lo; one exists within radius hi.
    double lo = 0.0;
    double hi = 0.0;
    bool capped = false;
};

/// Smallest radius admitting a point where the label stops beating some
/// other class (or the given target), by bisection on exact ranges.
DistortionBracket minimal_adversarial_distortion(const Network &net, const Vector &x0, std::size_t label, Norm p,
                                                 std::optional<std::size_t> target, double relTol = 1e-6,
                                                 double cap = 10.0);

} // namespace frown::oracle
