#pragma once

// LP relaxation of the network: exact affine layers, every activation
// replaced by one or more bounding lines per side, interval rows for every
// pre-activation and a polyhedral encoding of the input ball.

#include "frown/crown.hpp"
#include "frown/simplex.hpp"

#include <array>
#include <vector>

namespace frown::lp {

using crown::LayerBounds;
using relax::Line;
using relax::Side;

enum class LineTag {
    Default,   // the CROWN default choice
    Chord,     // secant, when it is the fixed line of the case
    TangentL,  // tangent at l, when l is an admissible tangent point
    TangentU,  // tangent at u, when u is an admissible tangent point
    Slope0,    // relu lower (0, 0)
    Slope1,    // relu lower (1, 0)
};

/// Which lines bound each activation. Tags that are not valid for a given
/// interval are dropped; duplicates collapse.
struct RelaxationMenu
{
    std::vector<LineTag> reluLower{LineTag::Default};
    std::vector<LineTag> reluUpper{LineTag::Default};
    std::vector<LineTag> smoothLower{LineTag::Default};
    std::vector<LineTag> smoothUpper{LineTag::Default};

    /// One line per side: the CROWN default.
    static RelaxationMenu single();
    /// relu lower {0, 1}; sigmoid/tanh: default, chord and endpoint tangents.
    static RelaxationMenu multi();

    std::vector<Line> lines(Activation act, Side side, double l, double u) const;
};

/// lines[v][j][side] for hidden layers 0..layers-1 (side 0 = lower, 1 = upper).
using LineMenu = std::vector<std::vector<std::array<std::vector<Line>, 2>>>;

LineMenu menu_lines(const Network &net, const LayerBounds &bounds, std::size_t layers,
                    const RelaxationMenu &menu);
LineMenu single_lines(const crown::LineSet &lines);

/// min (sense lower) or max (upper) of z(layer)_neuron over the relaxation of
/// layers 0..layer-1. Throws UnsupportedError for p = 2.
LpProblem build_lp(const Network &net, const PerturbationSpec &spec, std::size_t layer,
                   std::size_t neuron, Side sense, const LayerBounds &bounds, const LineMenu &lines);

LpProblem build_lp(const Network &net, const PerturbationSpec &spec, std::size_t layer,
                   std::size_t neuron, Side sense, const LayerBounds &bounds,
                   const RelaxationMenu &menu);

/// Variable layout of build_lp: x first, then z(v), a(v) per hidden layer,
/// then the l1 auxiliaries.
struct Layout
{
    std::size_t input = 0;
    std::vector<std::size_t> z;
    std::vector<std::size_t> a;
    std::size_t auxiliary = 0;
};

Layout layout(const Network &net, const PerturbationSpec &spec, std::size_t layer);

/// Assignment of every LP variable at input x (exact network values).
Vector assignment_at(const Network &net, const PerturbationSpec &spec, std::size_t layer, const Vector &x);

enum class Mode {
    /// Intervals are the LP's own optima, lines are regenerated from the menu.
    Baseline,
    /// Intervals and lines imported verbatim from a self-consistent CROWN run.
    CrownLines,
};

struct Result
{
    LayerBounds bounds;
    Vector outputLower;
    Vector outputUpper;
    long iterations = 0;
};

Result lp_propagate(const Network &net, const PerturbationSpec &spec, const RelaxationMenu &menu,
                    Mode mode = Mode::Baseline);

} // namespace frown::lp
