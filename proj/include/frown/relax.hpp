#pragma once

#include "frown/model.hpp"

#include <optional>
#include <string_view>

namespace frown::relax {

/// Degenerate intervals (u - l at or below this) collapse to a midpoint tangent.
inline constexpr double kDegenerateWidth = 1e-12;

/// Slack allowed by validate_line.
inline constexpr double kLineSlack = 1e-9;

enum class Side { Lower, Upper };

std::string_view to_string(Side side);

/// slope * z + intercept.
struct Line
{
    double slope = 0.0;
    double intercept = 0.0;

    double operator()(double z) const { return slope * z + intercept; }
    bool operator==(const Line &) const = default;
};

double derivative(Activation act, double z);
double second_derivative(Activation act, double z);

/// t(s, y) = act(y) - s * y: intercept of the slope-s line through (y, act(y)).
double intercept_through(Activation act, double slope, double y);

/// Tangent to the activation at d.
Line tangent(Activation act, double d);

/// Secant through (l, act(l)) and (u, act(u)).
Line chord(Activation act, double l, double u);

enum class Anchor { Left, Right };

/// Abscissa d on the far side of the inflection point whose tangent passes
/// through the anchored endpoint. Empty when no such d lies inside [l, u]
/// (the caller then uses the chord).
std::optional<double> tangent_point_through(Activation act, Anchor anchor, double l, double u);

/// Which row of the bounding-line search table an interval falls in.
enum class Case {
    Degenerate,   // u - l <= kDegenerateWidth
    NonPositive,  // l < u <= 0
    NonNegative,  // 0 <= l < u
    Crossing,     // relu, l < 0 < u
    Case1,        // s-shaped upper, l < 0 < u, tangent at u clears (l, act(l))
    Case2,        // s-shaped upper, l < 0 < u, otherwise
    Case3,        // s-shaped lower, l < 0 < u, tangent at l stays under (u, act(u))
    Case4,        // s-shaped lower, l < 0 < u, otherwise
};

std::string_view to_string(Case c);

/// The admissible bounding lines for one neuron and one side. Either a single
/// fixed line or a one-parameter family: relu lower slope s -> (s, 0), or a
/// tangent point d -> tangent(d) for sigmoid/tanh.
class LineSpace
{
public:
    static LineSpace fixed(Activation act, Side side, Case tag, Line line);
    static LineSpace variable(Activation act, Side side, Case tag, double lo, double hi);

    Activation activation() const { return _activation; }
    Side side() const { return _side; }
    Case tag() const { return _tag; }
    bool isFixed() const { return !_variable; }
    double lo() const { return _lo; }
    double hi() const { return _hi; }
    double width() const { return _hi - _lo; }

    /// Line for variable value v (ignored when fixed). v must lie in [lo, hi].
    Line generate(double v) const;

    /// d(slope)/dv and d(intercept)/dv at v; zero when fixed.
    Line generateDerivative(double v) const;

    double clamp(double v) const;
    bool contains(double v) const { return v >= _lo && v <= _hi; }

private:
    LineSpace() = default;

    Activation _activation = Activation::Relu;
    Side _side = Side::Lower;
    Case _tag = Case::Degenerate;
    bool _variable = false;
    double _lo = 0.0;
    double _hi = 0.0;
    Line _fixed;
};

LineSpace line_space(Activation act, Side side, double l, double u);

/// True iff the line bounds the activation on the given side at grid-size
/// equispaced points over [l, u] (both endpoints included), with slack kLineSlack.
bool validate_line(Activation act, Side side, double l, double u, const Line &line,
                   int gridSize = 1001);

} // namespace frown::relax
