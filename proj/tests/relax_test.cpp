#include "frown/relax.hpp"

#include <doctest.h>

#include <cmath>

using namespace frown;
using namespace frown::relax;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

TEST_SUITE("relax")
{
    TEST_CASE("relu chords")
    {
        const Line a = chord(Activation::Relu, -1.0, 1.0);
        CHECK(a.slope == doctest::Approx(0.5));
        CHECK(a.intercept == doctest::Approx(0.5));
        const Line b = chord(Activation::Relu, -3.0, 1.0);
        CHECK(b.slope == doctest::Approx(0.25));
        CHECK(b.intercept == doctest::Approx(0.75));
    }

    TEST_CASE("sigmoid chord")
    {
        const Line c = chord(Activation::Sigmoid, -2.0, 2.0);
        CHECK(c.slope == doctest::Approx(0.19040).epsilon(1e-4));
        CHECK(c.intercept == doctest::Approx(sigmoid(-2.0) + 2.0 * c.slope));
    }

    TEST_CASE("anchored tangent points")
    {
        const auto ld = tangent_point_through(Activation::Sigmoid, Anchor::Left, -2.0, 2.0);
        const auto ud = tangent_point_through(Activation::Sigmoid, Anchor::Right, -2.0, 2.0);
        REQUIRE(ld);
        REQUIRE(ud);
        CHECK(*ld > 0.0);
        CHECK(*ud == doctest::Approx(-*ld).epsilon(1e-9));
        const double d = *ld;
        const double g = derivative(Activation::Sigmoid, d) * (-2.0 - d) + sigmoid(d) - sigmoid(-2.0);
        CHECK(std::abs(g) <= 1e-10);

        const auto td = tangent_point_through(Activation::Tanh, Anchor::Right, -1.0, 3.0);
        REQUIRE(td);
        CHECK(*td < 0.0);
        CHECK(tangent(Activation::Tanh, *td)(3.0) == doctest::Approx(std::tanh(3.0)).epsilon(1e-9));
    }

    TEST_CASE("anchored tangent is undefined off a crossing interval")
    {
        CHECK_FALSE(tangent_point_through(Activation::Sigmoid, Anchor::Left, 1.0, 2.0).has_value());
        CHECK_FALSE(tangent_point_through(Activation::Tanh, Anchor::Right, -3.0, -1.0).has_value());
        CHECK_THROWS(tangent_point_through(Activation::Relu, Anchor::Left, -1.0, 2.0));
    }

    TEST_CASE("relu line spaces")
    {
        const LineSpace fixed = line_space(Activation::Relu, Side::Lower, 2.0, 5.0);
        CHECK(fixed.isFixed());
        CHECK(fixed.generate(0.0) == Line{1.0, 0.0});

        const LineSpace crossing = line_space(Activation::Relu, Side::Lower, -1.0, 1.0);
        CHECK_FALSE(crossing.isFixed());
        CHECK(crossing.lo() == 0.0);
        CHECK(crossing.hi() == 1.0);
        CHECK(crossing.generate(0.3) == Line{0.3, 0.0});
        CHECK(crossing.generateDerivative(0.3) == Line{1.0, 0.0});

        const LineSpace off = line_space(Activation::Relu, Side::Upper, -3.0, -1.0);
        CHECK(off.generate(0.0) == Line{0.0, 0.0});
    }

    TEST_CASE("sigmoid upper case 1")
    {
        const double check = sigmoid(2.0) + derivative(Activation::Sigmoid, 2.0) * (-4.0);
        CHECK(check == doctest::Approx(0.4608).epsilon(1e-3));
        const LineSpace space = line_space(Activation::Sigmoid, Side::Upper, -2.0, 2.0);
        CHECK(space.tag() == Case::Case1);
        CHECK_FALSE(space.isFixed());
        CHECK(space.lo() == doctest::Approx(*tangent_point_through(Activation::Sigmoid, Anchor::Left, -2.0, 2.0)));
        CHECK(space.hi() == 2.0);
    }

    TEST_CASE("s-shaped cases cover every branch")
    {
        CHECK(line_space(Activation::Sigmoid, Side::Upper, -3.0, -1.0).tag() == Case::NonPositive);
        CHECK(line_space(Activation::Sigmoid, Side::Upper, 1.0, 3.0).tag() == Case::NonNegative);
        CHECK(line_space(Activation::Sigmoid, Side::Upper, -8.0, 0.5).tag() == Case::Case2);
        CHECK(line_space(Activation::Sigmoid, Side::Lower, -3.0, -1.0).tag() == Case::NonPositive);
        CHECK(line_space(Activation::Sigmoid, Side::Lower, -2.0, 2.0).tag() == Case::Case3);
        CHECK(line_space(Activation::Sigmoid, Side::Lower, -0.5, 8.0).tag() == Case::Case4);
        CHECK(line_space(Activation::Sigmoid, Side::Lower, 1.0, 3.0).tag() == Case::NonNegative);
        CHECK(line_space(Activation::Tanh, Side::Lower, 0.3, 0.3).tag() == Case::Degenerate);
    }

    TEST_CASE("every generated line is valid across the admissible range")
    {
        const double intervals[][2] = {{-2, 2}, {-8, 0.5}, {-0.5, 8}, {-3, -1}, {1, 3}, {-0.1, 0.1}, {-5, 1}};
        for (const Activation act : {Activation::Relu, Activation::Sigmoid, Activation::Tanh}) {
            for (const auto &iv : intervals) {
                for (const Side side : {Side::Lower, Side::Upper}) {
                    const LineSpace space = line_space(act, side, iv[0], iv[1]);
                    for (int t = 0; t <= 10; ++t) {
                        const double v = space.isFixed() ? 0.0 : space.lo() + space.width() * t / 10.0;
                        CAPTURE(iv[0]);
                        CAPTURE(iv[1]);
                        CAPTURE(v);
                        CHECK(validate_line(act, side, iv[0], iv[1], space.generate(v)));
                    }
                }
            }
        }
    }

    TEST_CASE("generator derivatives match finite differences")
    {
        const LineSpace space = line_space(Activation::Tanh, Side::Upper, -1.0, 3.0);
        REQUIRE_FALSE(space.isFixed());
        const double v = 0.5 * (space.lo() + space.hi());
        const double h = 1e-6;
        const Line plus = space.generate(v + h);
        const Line minus = space.generate(v - h);
        const Line d = space.generateDerivative(v);
        CHECK(d.slope == doctest::Approx((plus.slope - minus.slope) / (2 * h)).epsilon(1e-6));
        CHECK(d.intercept == doctest::Approx((plus.intercept - minus.intercept) / (2 * h)).epsilon(1e-6));
    }

    TEST_CASE("validate_line")
    {
        CHECK(validate_line(Activation::Relu, Side::Upper, -1.0, 1.0, {0.5, 0.5}));
        CHECK(validate_line(Activation::Relu, Side::Lower, -1.0, 1.0, {1.0, 0.0}));
        CHECK_FALSE(validate_line(Activation::Relu, Side::Lower, -1.0, 1.0, {0.0, 0.1}));
    }
}
