#include "frown/lp.hpp"
#include "frown/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace frown;
using namespace frown::lp;

TEST_SUITE("lp")
{
    TEST_CASE("row and variable tally for a 2-layer relu net")
    {
        const Network net = generate_random_network(1, {3, 4, 2}, Activation::Relu, 1.0);
        const PerturbationSpec spec(testing::random_point(3, 1), Norm::Linf, 0.2);
        const crown::Result ref = crown::propagate(net, spec);
        const LpProblem p = build_lp(net, spec, 1, 0, Side::Lower, ref.bounds, RelaxationMenu::single());
        CHECK(p.variableCount() == 3 + 2 * 4);
        CHECK(p.rowCount() == 4 + 2 * 4 + 2 * 4 + 2 * 3);

        const PerturbationSpec l1(spec.x0, Norm::L1, 0.2);
        const LpProblem q = build_lp(net, l1, 1, 0, Side::Lower, ref.bounds, RelaxationMenu::single());
        CHECK(q.variableCount() == 3 + 2 * 4 + 3);
        CHECK(q.rowCount() == 4 + 2 * 4 + 2 * 4 + 2 * 3 + 1);
    }

    TEST_CASE("p = 2 is unsupported")
    {
        const Network net = testing::toy_relu();
        const PerturbationSpec spec(Vector::Zero(1), Norm::L2, 0.5);
        CHECK_THROWS_AS(lp_propagate(net, spec, RelaxationMenu::single()), UnsupportedError);
        const crown::Result ref = crown::propagate(net, spec);
        CHECK_THROWS_AS(build_lp(net, spec, 1, 0, Side::Lower, ref.bounds, RelaxationMenu::single()),
                        UnsupportedError);
    }

    TEST_CASE("toy net with a fixed lower slope matches -eps * s")
    {
        const Network net = testing::toy_relu();
        const PerturbationSpec spec(Vector::Zero(1), Norm::Linf, 1.0);
        const crown::Result ref = crown::propagate(net, spec);
        for (const double s : {0.0, 0.4, 1.0}) {
            crown::LineSet lines;
            lines.layers = {{crown::NeuronLines{{s, 0.0}, relax::chord(Activation::Relu, -1.0, 1.0)}}};
            const Solution sol = solve(build_lp(net, spec, 1, 0, Side::Lower, ref.bounds, single_lines(lines)));
            CHECK(sol.value == doctest::Approx(-s));
        }
    }

    TEST_CASE("exact network values satisfy every row")
    {
        const Network net = generate_random_network(3, {3, 5, 5, 2}, Activation::Sigmoid, 1.0);
        const PerturbationSpec spec(testing::random_point(3, 3), Norm::L1, 0.3);
        const crown::Result ref = crown::propagate(net, spec);
        const LpProblem p = build_lp(net, spec, 2, 1, Side::Upper, ref.bounds, RelaxationMenu::multi());
        std::mt19937_64 rng(1);
        for (int t = 0; t < 200; ++t) {
            const Vector x = oracle::sample_ball(spec, rng);
            CHECK(p.worstSlack(assignment_at(net, spec, 2, x)) >= -1e-9);
        }
    }

    TEST_CASE("imported CROWN lines reproduce CROWN")
    {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const Activation act = seed % 2 == 0 ? Activation::Relu : Activation::Sigmoid;
            const Network net = generate_random_network(40 + seed, {3, 5, 4, 3}, act, 1.0);
            const PerturbationSpec spec(testing::random_point(3, seed), Norm::Linf, 0.3);
            const crown::Result c = crown::propagate(net, spec);
            const Result l = lp_propagate(net, spec, RelaxationMenu::single(), Mode::CrownLines);
            for (std::size_t k = 0; k < net.depth(); ++k) {
                for (Eigen::Index i = 0; i < l.bounds.lower[k].size(); ++i) {
                    const double tolL = 1e-5 * std::max(1.0, std::abs(c.bounds.lower[k][i]));
                    const double tolU = 1e-5 * std::max(1.0, std::abs(c.bounds.upper[k][i]));
                    CHECK(std::abs(l.bounds.lower[k][i] - c.bounds.lower[k][i]) <= tolL);
                    CHECK(std::abs(l.bounds.upper[k][i] - c.bounds.upper[k][i]) <= tolU);
                }
            }
        }
    }

    TEST_CASE("multi-line menu never loosens the relu minimum")
    {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const Network net = generate_random_network(60 + seed, {3, 6, 6, 3}, Activation::Relu, 1.0);
            const PerturbationSpec spec(testing::random_point(3, seed), Norm::Linf, 0.3);
            const crown::Result ref = crown::propagate(net, spec);
            for (std::size_t i = 0; i < 3; ++i) {
                const double one =
                    solve(build_lp(net, spec, 2, i, Side::Lower, ref.bounds, RelaxationMenu::single())).value;
                const double two =
                    solve(build_lp(net, spec, 2, i, Side::Lower, ref.bounds, RelaxationMenu::multi())).value;
                CHECK(two >= one - 1e-9);
            }
        }
    }

    TEST_CASE("menu lines are valid and deduplicated")
    {
        const RelaxationMenu multi = RelaxationMenu::multi();
        const auto relu = multi.lines(Activation::Relu, Side::Lower, -1.0, 2.0);
        CHECK(relu.size() == 2);
        const auto smooth = multi.lines(Activation::Sigmoid, Side::Upper, 0.5, 2.0);
        CHECK(smooth.size() >= 2);
        for (const auto &line : smooth)
            CHECK(relax::validate_line(Activation::Sigmoid, Side::Upper, 0.5, 2.0, line));
        CHECK(RelaxationMenu::single().lines(Activation::Tanh, Side::Lower, -1.0, 2.0).size() == 1);
    }

    TEST_CASE("baseline LP bounds are sound")
    {
        const Network net = generate_random_network(80, {3, 5, 5, 2}, Activation::Tanh, 1.0);
        const PerturbationSpec spec(testing::random_point(3, 8), Norm::L1, 0.4);
        const Result r = lp_propagate(net, spec, RelaxationMenu::multi());
        CHECK(oracle::sample_check(net, spec, r.bounds, 20000, 3).passed());
    }

    TEST_CASE("layerwise sigmoid LPs return feasible vertices")
    {
        // Tight deep intervals give near-parallel rows and bases with
        // condition numbers near 1e10; these nets once broke the solver.
        for (const std::uint64_t seed : {2100, 2101, 2102, 2109}) {
            const Network net = generate_random_network(seed, {3, 6, 6, 6, 3}, Activation::Sigmoid, 1.0);
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            Vector x0(3);
            for (Eigen::Index i = 0; i < 3; ++i)
                x0[i] = unit(rng);
            const PerturbationSpec spec(x0, seed % 2 == 0 ? Norm::Linf : Norm::L1, 0.15);
            const crown::Result ref = crown::propagate(net, spec);
            LayerBounds bounds;
            bounds.lower = {ref.bounds.lower[0]};
            bounds.upper = {ref.bounds.upper[0]};
            for (std::size_t k = 1; k < net.depth(); ++k) {
                const LineMenu lines = menu_lines(net, bounds, k, RelaxationMenu::multi());
                Vector lo(static_cast<Eigen::Index>(net.width(k)));
                Vector hi(lo.size());
                for (Eigen::Index i = 0; i < lo.size(); ++i) {
                    for (const Side side : {Side::Lower, Side::Upper}) {
                        const LpProblem p =
                            build_lp(net, spec, k, static_cast<std::size_t>(i), side, bounds, lines);
                        Solution sol;
                        REQUIRE_NOTHROW(sol = solve(p));
                        CHECK(p.worstSlack(sol.primal) >= -1e-7);
                        (side == Side::Lower ? lo : hi)[i] = sol.value;
                    }
                }
                bounds.lower.push_back(lo);
                bounds.upper.push_back(hi);
            }
            CHECK(oracle::sample_check(net, spec, bounds, 5000, seed).passed());
        }
    }
}
