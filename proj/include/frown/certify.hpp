#pragma once

#include "frown/lp.hpp"
#include "frown/tighten.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace frown::certify {

enum class Method { Crown, Frown, Lp };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct Settings
{
    tighten::OptimizerConfig optimizer;
    lp::RelaxationMenu menu = lp::RelaxationMenu::multi();
};

/// Output bounds of a method at one radius.
struct OutputBounds
{
    Vector lower;
    Vector upper;
};

OutputBounds output_bounds(const Network &net, const PerturbationSpec &spec, Method method,
                           const Settings &settings = {});

struct Check
{
    bool certified = false;
    /// gamma_L(label) - gamma_U(j) for every required j (all j != label, or the target only).
    std::vector<double> margins;
    /// Classes the margins refer to, in the same order.
    std::vector<std::size_t> classes;
    OutputBounds bounds;
    /// The label is not the network's prediction at x0 (certificate is vacuous).
    bool labelMismatch = false;
};

Check certified_at(const Network &net, const Vector &x0, std::size_t label, double epsilon, Norm p, Method method,
                   std::optional<std::size_t> target = std::nullopt, const Settings &settings = {});

struct Certificate
{
    double epsilon = 0.0;
    std::optional<std::size_t> target;
    Method method = Method::Crown;
    Norm p = Norm::Linf;
    std::size_t label = 0;
    std::vector<double> margins;
    std::vector<std::size_t> classes;
    double seconds = 0.0;
    int iterations = 0;
    /// Still certified at the cap; epsilon is the cap.
    bool capHit = false;
    /// Not certified even at the smallest probed radius; epsilon is 0.
    bool uncertified = false;
    bool labelMismatch = false;
};

inline constexpr double kDefaultRelTol = 1e-3;
inline constexpr double kDefaultCap = 10.0;
inline constexpr double kStartRadius = 1e-3;
inline constexpr int kMaxHalvings = 20;

/// Doubling from kStartRadius until certification fails (or the cap), then
/// bisection until (hi - lo) / lo <= relTol. Returns the certified end.
Certificate search_epsilon(const Network &net, const Vector &x0, std::size_t label, Norm p, Method method,
                           std::optional<std::size_t> target = std::nullopt, double relTol = kDefaultRelTol,
                           double cap = kDefaultCap, const Settings &settings = {});

} // namespace frown::certify
