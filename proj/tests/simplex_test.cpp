#include "frown/simplex.hpp"

#include <doctest.h>

#include <random>

using namespace frown;
using namespace frown::lp;

TEST_SUITE("simplex")
{
    TEST_CASE("min x on the unit interval")
    {
        LpProblem p;
        const int x = p.addVariable("x");
        p.objective = {1.0};
        p.addRow({{x, 1.0}}, RowType::Ge, 0.0);
        p.addRow({{x, 1.0}}, RowType::Le, 1.0);
        const Solution s = solve(p);
        CHECK(s.value == doctest::Approx(0.0));
        CHECK(s.primal[0] == doctest::Approx(0.0));
        p.maximize = true;
        CHECK(solve(p).value == doctest::Approx(1.0));
    }

    TEST_CASE("small textbook problem")
    {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0  ->  36 at (2, 6)
        LpProblem p;
        const int x = p.addVariable("x");
        const int y = p.addVariable("y");
        p.objective = {3.0, 5.0};
        p.maximize = true;
        p.addRow({{x, 1.0}}, RowType::Le, 4.0);
        p.addRow({{y, 2.0}}, RowType::Le, 12.0);
        p.addRow({{x, 3.0}, {y, 2.0}}, RowType::Le, 18.0);
        p.addRow({{x, 1.0}}, RowType::Ge, 0.0);
        p.addRow({{y, 1.0}}, RowType::Ge, 0.0);
        const Solution s = solve(p);
        CHECK(s.value == doctest::Approx(36.0));
        CHECK(s.primal[0] == doctest::Approx(2.0));
        CHECK(s.primal[1] == doctest::Approx(6.0));
    }

    TEST_CASE("equalities and free variables")
    {
        // min x - y  s.t. x + y = 1, -2 <= x - 2y <= 2 (x, y free)
        LpProblem p;
        const int x = p.addVariable("x");
        const int y = p.addVariable("y");
        p.objective = {1.0, -1.0};
        p.addRow({{x, 1.0}, {y, 1.0}}, RowType::Eq, 1.0);
        p.addRow({{x, 1.0}, {y, -2.0}}, RowType::Le, 2.0);
        p.addRow({{x, 1.0}, {y, -2.0}}, RowType::Ge, -2.0);
        const Solution s = solve(p);
        // x = 1 - y, x - 2y = 1 - 3y >= -2 -> y <= 1; min 1 - 2y -> y = 1
        CHECK(s.value == doctest::Approx(-1.0));
        CHECK(p.worstSlack(s.primal) >= -1e-9);
    }

    TEST_CASE("random LPs with a planted optimal vertex")
    {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 4;
            Vector vertex(n);
            for (int j = 0; j < n; ++j)
                vertex[j] = gauss(rng);
            LpProblem p;
            for (int j = 0; j < n; ++j)
                p.addVariable("x" + std::to_string(j));
            // n tight rows a_i . x <= a_i . vertex, objective = -sum a_i (a
            // strictly positive combination of the tight normals is optimal
            // for the max), plus slack rows.
            Vector c = Vector::Zero(n);
            for (int i = 0; i < n; ++i) {
                Vector a(n);
                for (int j = 0; j < n; ++j)
                    a[j] = gauss(rng);
                std::vector<std::pair<int, double>> terms;
                for (int j = 0; j < n; ++j)
                    terms.emplace_back(j, a[j]);
                p.addRow(terms, RowType::Le, a.dot(vertex));
                c += (1.0 + i) * a;
            }
            for (int i = 0; i < 6; ++i) {
                Vector a(n);
                for (int j = 0; j < n; ++j)
                    a[j] = gauss(rng);
                std::vector<std::pair<int, double>> terms;
                for (int j = 0; j < n; ++j)
                    terms.emplace_back(j, a[j]);
                p.addRow(terms, RowType::Le, a.dot(vertex) + 1.0 + std::abs(gauss(rng)));
            }
            p.objective.assign(c.data(), c.data() + n);
            p.maximize = true;
            const Solution s = solve(p);
            CHECK(s.value == doctest::Approx(c.dot(vertex)).epsilon(1e-8));
        }
    }

    TEST_CASE("infeasible and unbounded problems throw")
    {
        LpProblem p;
        const int x = p.addVariable("x");
        p.objective = {1.0};
        p.addRow({{x, 1.0}}, RowType::Ge, 2.0);
        p.addRow({{x, 1.0}}, RowType::Le, 1.0);
        CHECK_THROWS_AS(solve(p), InfeasibleError);

        LpProblem q;
        const int y = q.addVariable("y");
        q.objective = {1.0};
        q.addRow({{y, 1.0}}, RowType::Le, 1.0);
        CHECK_THROWS_AS(solve(q), SolverError);
    }

    TEST_CASE("lp text export names every row")
    {
        LpProblem p;
        const int x = p.addVariable("x");
        p.objective = {2.0};
        p.addRow({{x, 1.0}}, RowType::Ge, -1.0, "floor");
        const std::string text = p.toLpText();
        CHECK(text.find("Minimize") != std::string::npos);
        CHECK(text.find("floor") != std::string::npos);
    }
}
