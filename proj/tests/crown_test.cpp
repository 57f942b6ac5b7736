#include "frown/crown.hpp"
#include "frown/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace frown;
using namespace frown::crown;

namespace {

LineSet toy_lines(double s)
{
    LineSet lines;
    lines.layers = {{NeuronLines{{s, 0.0}, {0.5, 0.5}}}};
    return lines;
}

Network toy_with_output_weight(double w)
{
    return Network(Activation::Relu, {{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)},
                                      {Matrix::Constant(1, 1, w), Vector::Zero(1)}});
}

} // namespace

TEST_SUITE("crown")
{
    TEST_CASE("single composition step uses the line matching the sign")
    {
        const AffineBound pos = backward_bound(toy_with_output_weight(1.0), 1, 0, toy_lines(0.3), Side::Lower);
        CHECK(pos.coeffs[0] == doctest::Approx(0.3));
        CHECK(pos.offset == doctest::Approx(0.0));

        const AffineBound neg = backward_bound(toy_with_output_weight(-1.0), 1, 0, toy_lines(0.3), Side::Lower);
        CHECK(neg.coeffs[0] == doctest::Approx(-0.5));
        CHECK(neg.offset == doctest::Approx(-0.5));
    }

    TEST_CASE("dual norm concretization")
    {
        AffineBound bound;
        bound.coeffs = Vector(2);
        bound.coeffs << 3.0, -4.0;
        bound.offset = 1.0;
        bound.sense = Side::Lower;
        const Vector x0 = Vector::Zero(2);
        CHECK(concretize(bound, PerturbationSpec(x0, Norm::Linf, 0.1)) == doctest::Approx(0.3));
        CHECK(concretize(bound, PerturbationSpec(x0, Norm::L2, 0.1)) == doctest::Approx(0.5));
        CHECK(concretize(bound, PerturbationSpec(x0, Norm::L1, 0.1)) == doctest::Approx(0.6));
        bound.sense = Side::Upper;
        CHECK(concretize(bound, PerturbationSpec(x0, Norm::Linf, 0.1)) == doctest::Approx(1.7));
    }

    TEST_CASE("dual maximizer attains the concretized value")
    {
        Vector c(3);
        c << 0.5, -2.0, 1.0;
        const Vector x0 = testing::random_point(3, 4);
        for (const Norm p : {Norm::L1, Norm::L2, Norm::Linf}) {
            for (const Side sense : {Side::Lower, Side::Upper}) {
                const PerturbationSpec spec(x0, p, 0.3);
                AffineBound bound{c, 0.0, 0.0, sense};
                const double gamma = concretize(bound, spec);
                const Vector x = dual_maximizer(c, spec, sense);
                CHECK(c.dot(x) == doctest::Approx(gamma).epsilon(1e-12));
                CHECK(norm(x - x0, p) <= 0.3 + 1e-12);
            }
        }
    }

    TEST_CASE("backward bound is sound on a random 3-layer net")
    {
        const Network net = generate_random_network(11, {3, 5, 4, 3}, Activation::Tanh, 1.0);
        const PerturbationSpec spec(testing::random_point(3, 12), Norm::Linf, 0.2);
        const Result result = propagate(net, spec);
        std::mt19937_64 rng(5);
        for (int t = 0; t < 10000; ++t) {
            const Vector x = oracle::sample_ball(spec, rng);
            const Vector z = net.forward(x);
            for (std::size_t i = 0; i < 3; ++i) {
                const AffineBound &lo = result.outputLower[i];
                const AffineBound &hi = result.outputUpper[i];
                REQUIRE(lo.coeffs.dot(x) + lo.offset <= z[static_cast<Eigen::Index>(i)] + 1e-9);
                REQUIRE(hi.coeffs.dot(x) + hi.offset >= z[static_cast<Eigen::Index>(i)] - 1e-9);
            }
        }
    }

    TEST_CASE("toy net: first layer interval and default output bounds")
    {
        const Network net = testing::toy_relu();
        const PerturbationSpec spec(Vector::Zero(1), Norm::Linf, 1.0);
        const Result result = propagate(net, spec);
        CHECK(result.bounds.lower[0][0] == doctest::Approx(-1.0));
        CHECK(result.bounds.upper[0][0] == doctest::Approx(1.0));
        // default slope is 1 because u >= |l|
        CHECK(result.lines.layers[0][0].lower == Line{1.0, 0.0});
        CHECK(result.bounds.lower[1][0] == doctest::Approx(-1.0));
        CHECK(result.bounds.upper[1][0] == doctest::Approx(1.0));
    }

    TEST_CASE("positive-bias sigmoid layers stay sound")
    {
        Network base = generate_random_network(3, {3, 6, 6, 2}, Activation::Sigmoid, 1.0);
        std::vector<Layer> layers = base.layers();
        layers[0].bias.array() += 10.0;
        layers[1].bias.array() += 10.0;
        const Network net(Activation::Sigmoid, layers);
        const PerturbationSpec spec(testing::random_point(3, 9), Norm::Linf, 0.5);
        const Result result = propagate(net, spec);
        CHECK(result.bounds.lower[0].minCoeff() >= 0.0);
        CHECK(oracle::sample_check(net, spec, result.bounds, 100000, 1).passed());
    }

    TEST_CASE("margins on the linear net")
    {
        const Network net = testing::linear_net();
        Vector x0(1);
        x0 << 0.5;
        const Result a = propagate(net, PerturbationSpec(x0, Norm::Linf, 0.2));
        const auto ma = margins(a.bounds.lower.back(), a.bounds.upper.back(), 0);
        REQUIRE(ma.size() == 1);
        CHECK(ma[0] == doctest::Approx(0.6));
        const Result b = propagate(net, PerturbationSpec(x0, Norm::Linf, 0.5));
        CHECK(margins(b.bounds.lower.back(), b.bounds.upper.back(), 0)[0] == doctest::Approx(0.0).epsilon(1e-12));
    }

    TEST_CASE("margins are direct differences")
    {
        Vector lo(3), hi(3);
        lo << 1.0, 0.0, -1.0;
        hi << 2.0, 0.5, 0.2;
        const auto m = margins(lo, hi, 1);
        REQUIRE(m.size() == 2);
        CHECK(m[0] == doctest::Approx(0.0 - 2.0));
        CHECK(m[1] == doctest::Approx(0.0 - 0.2));
    }

    TEST_CASE("forward value lies strictly inside the bounds")
    {
        const Network net = generate_random_network(21, {4, 6, 6, 3}, Activation::Relu, 1.0);
        const Vector x0 = testing::random_point(4, 22);
        const Result result = propagate(net, PerturbationSpec(x0, Norm::L2, 0.05));
        const Vector y = net.forward(x0);
        CHECK((y.array() > result.bounds.lower.back().array()).all());
        CHECK((y.array() < result.bounds.upper.back().array()).all());
    }

    TEST_CASE("per-neuron mode with the default chooser matches self-consistent mode")
    {
        const Network net = generate_random_network(31, {3, 5, 5, 2}, Activation::Sigmoid, 1.0);
        const PerturbationSpec spec(testing::random_point(3, 32), Norm::L1, 0.3);
        const Result a = propagate(net, spec, Mode::SelfConsistent);
        const Result b = propagate(net, spec, Mode::PerNeuron);
        for (std::size_t k = 0; k < net.depth(); ++k) {
            CHECK((a.bounds.lower[k] - b.bounds.lower[k]).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((a.bounds.upper[k] - b.bounds.upper[k]).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}
