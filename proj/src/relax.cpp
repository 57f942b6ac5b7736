#include "frown/relax.hpp"

#include <algorithm>
#include <cmath>

namespace frown::relax {

std::string_view to_string(Side side)
{
    return side == Side::Lower ? "lower" : "upper";
}

std::string_view to_string(Case c)
{
    switch (c) {
    case Case::Degenerate: return "degenerate";
    case Case::NonPositive: return "l<u<=0";
    case Case::NonNegative: return "0<=l<u";
    case Case::Crossing: return "l<0<u";
    case Case::Case1: return "case1";
    case Case::Case2: return "case2";
    case Case::Case3: return "case3";
    case Case::Case4: return "case4";
    }
    return "?";
}

double derivative(Activation act, double z)
{
    switch (act) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
        const double s = activate(act, z);
        return s * (1.0 - s);
    }
    case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    }
    return 0.0;
}

double second_derivative(Activation act, double z)
{
    switch (act) {
    case Activation::Relu: return 0.0;
    case Activation::Sigmoid: {
        const double s = activate(act, z);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Activation::Tanh: {
        const double t = std::tanh(z);
        return -2.0 * t * (1.0 - t * t);
    }
    }
    return 0.0;
}

double intercept_through(Activation act, double slope, double y)
{
    return activate(act, y) - slope * y;
}

Line tangent(Activation act, double d)
{
    const double slope = derivative(act, d);
    return {slope, intercept_through(act, slope, d)};
}

Line chord(Activation act, double l, double u)
{
    if (u - l <= kDegenerateWidth)
        return tangent(act, 0.5 * (l + u));
    const double slope = (activate(act, u) - activate(act, l)) / (u - l);
    return {slope, intercept_through(act, slope, l)};
}

std::optional<double> tangent_point_through(Activation act, Anchor anchor, double l, double u)
{
    if (act == Activation::Relu)
        throw Error("tangent_point_through is only defined for sigmoid and tanh");
    if (!(l < u))
        return std::nullopt;

    // Both s-shaped activations inflect at 0. The anchor must sit on one side
    // and the tangent point is searched on the other side, inside [l, u].
    const double e = anchor == Anchor::Left ? l : u;
    const double target = activate(act, e);
    auto residual = [&](double d) { return derivative(act, d) * (e - d) + activate(act, d) - target; };

    double a = 0.0;
    double b = 0.0;
    if (anchor == Anchor::Left) {
        if (!(l < 0.0 && u > 0.0))
            return std::nullopt;
        a = 0.0;
        b = u;
    } else {
        if (!(l < 0.0 && u > 0.0))
            return std::nullopt;
        a = l;
        b = 0.0;
    }

    double ga = residual(a);
    const double gb = residual(b);
    if (ga == 0.0)
        return a;
    if (gb == 0.0)
        return b;
    if ((ga < 0.0) == (gb < 0.0))
        return std::nullopt;

    for (int iter = 0; iter < 80; ++iter) {
        const double mid = 0.5 * (a + b);
        const double gm = residual(mid);
        if (gm == 0.0)
            return mid;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

LineSpace LineSpace::fixed(Activation act, Side side, Case tag, Line line)
{
    LineSpace space;
    space._activation = act;
    space._side = side;
    space._tag = tag;
    space._variable = false;
    space._fixed = line;
    return space;
}

LineSpace LineSpace::variable(Activation act, Side side, Case tag, double lo, double hi)
{
    LineSpace space;
    space._activation = act;
    space._side = side;
    space._tag = tag;
    space._variable = true;
    space._lo = lo;
    space._hi = std::max(lo, hi);
    return space;
}

double LineSpace::clamp(double v) const
{
    return std::clamp(v, _lo, _hi);
}

Line LineSpace::generate(double v) const
{
    if (!_variable)
        return _fixed;
    if (_activation == Activation::Relu)
        return {v, 0.0};
    return tangent(_activation, v);
}

Line LineSpace::generateDerivative(double v) const
{
    if (!_variable)
        return {0.0, 0.0};
    if (_activation == Activation::Relu)
        return {1.0, 0.0};
    const double curvature = second_derivative(_activation, v);
    return {curvature, -curvature * v};
}

LineSpace line_space(Activation act, Side side, double l, double u)
{
    if (u - l <= kDegenerateWidth)
        return LineSpace::fixed(act, side, Case::Degenerate, tangent(act, 0.5 * (l + u)));

    if (act == Activation::Relu) {
        const Case tag = u <= 0.0 ? Case::NonPositive : (l >= 0.0 ? Case::NonNegative : Case::Crossing);
        if (side == Side::Lower && tag == Case::Crossing)
            return LineSpace::variable(act, side, tag, 0.0, 1.0);
        return LineSpace::fixed(act, side, tag, chord(act, l, u));
    }

    if (side == Side::Upper) {
        if (u <= 0.0)
            return LineSpace::fixed(act, side, Case::NonPositive, chord(act, l, u));
        if (l >= 0.0)
            return LineSpace::variable(act, side, Case::NonNegative, l, u);
        const Line atU = tangent(act, u);
        if (atU(l) >= activate(act, l)) {
            if (const auto ld = tangent_point_through(act, Anchor::Left, l, u))
                return LineSpace::variable(act, side, Case::Case1, *ld, u);
        }
        return LineSpace::fixed(act, side, Case::Case2, chord(act, l, u));
    }

    if (u <= 0.0)
        return LineSpace::variable(act, side, Case::NonPositive, l, u);
    if (l >= 0.0)
        return LineSpace::fixed(act, side, Case::NonNegative, chord(act, l, u));
    const Line atL = tangent(act, l);
    if (atL(u) <= activate(act, u)) {
        if (const auto ud = tangent_point_through(act, Anchor::Right, l, u))
            return LineSpace::variable(act, side, Case::Case3, l, *ud);
    }
    return LineSpace::fixed(act, side, Case::Case4, chord(act, l, u));
}

bool validate_line(Activation act, Side side, double l, double u, const Line &line, int gridSize)
{
    if (gridSize < 2)
        throw Error("validate_line needs a grid of at least 2 points");
    for (int i = 0; i < gridSize; ++i) {
        const double z = i + 1 == gridSize ? u : l + (u - l) * static_cast<double>(i) / (gridSize - 1);
        const double gap = activate(act, z) - line(z);
        if (side == Side::Lower ? gap < -kLineSlack : gap > kLineSlack)
            return false;
    }
    return true;
}

} // namespace frown::relax
