#include "support.hpp"

#include <doctest.h>

using namespace frown;

TEST_SUITE("model")
{
    TEST_CASE("two-layer file loads and round-trips bit-identically")
    {
        const Network net = load_network(testing::fixture("small_relu.json"));
        CHECK(net.depth() == 3);
        const Network again = parse_network(serialize_network(net));
        REQUIRE(again.depth() == net.depth());
        for (std::size_t k = 0; k < net.depth(); ++k) {
            CHECK(again.layer(k).weights == net.layer(k).weights);
            CHECK(again.layer(k).bias == net.layer(k).bias);
        }
        CHECK(testing::toy_relu().depth() == 2);
    }

    TEST_CASE("shape chain violations are rejected")
    {
        const char *text = R"({"activation":"relu","widths":[2,4,5],
            "weights":[[[1,0],[0,1],[1,1],[0,0]],[[1,1,1],[1,1,1],[1,1,1],[1,1,1],[1,1,1]]],
            "biases":[[0,0,0,0],[0,0,0,0,0]]})";
        CHECK_THROWS_AS(parse_network(text), ShapeError);
    }

    TEST_CASE("unknown activation is rejected")
    {
        const char *text = R"({"activation":"gelu","widths":[1,1,1],"weights":[[[1]],[[1]]],"biases":[[0],[0]]})";
        CHECK_THROWS_AS(parse_network(text), ParseError);
        CHECK_THROWS_AS(parse_network("{not json"), ParseError);
    }

    TEST_CASE("forward on an identity relu net")
    {
        Matrix w2(2, 2);
        w2 << 1.0, 2.0, -1.0, 3.0;
        Vector b2(2);
        b2 << 0.5, -0.5;
        const Network net(Activation::Relu, {{Matrix::Identity(2, 2), Vector::Zero(2)}, {w2, b2}});
        Vector x(2);
        x << -1.0, 2.0;
        Vector hidden(2);
        hidden << 0.0, 2.0;
        CHECK((net.forward(x) - (w2 * hidden + b2)).norm() == doctest::Approx(0.0));
    }

    TEST_CASE("zero last layer gives a constant output")
    {
        const Network net = load_network(testing::fixture("constant_gap.json"));
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Vector y = net.forward(testing::random_point(2, seed, 3.0));
            CHECK(y[0] == 1.0);
            CHECK(y[1] == 0.0);
        }
    }

    TEST_CASE("generator is deterministic per seed")
    {
        const Network a = generate_random_network(1, {4, 8, 3}, Activation::Sigmoid, 1.0);
        const Network b = generate_random_network(1, {4, 8, 3}, Activation::Sigmoid, 1.0);
        const Network c = generate_random_network(2, {4, 8, 3}, Activation::Sigmoid, 1.0);
        CHECK(serialize_network(a) == serialize_network(b));
        CHECK(a.layer(0).weights != c.layer(0).weights);
        CHECK(a.inputSize() == 4);
        CHECK(a.depth() == 2);
        CHECK(a.forward(Vector::Zero(4)).size() == 3);
        CHECK_THROWS_AS(a.forward(Vector::Zero(3)), ShapeError);
    }

    TEST_CASE("norms and duals")
    {
        Vector v(2);
        v << 3.0, -4.0;
        CHECK(norm(v, Norm::L1) == 7.0);
        CHECK(norm(v, Norm::L2) == doctest::Approx(5.0));
        CHECK(norm(v, Norm::Linf) == 4.0);
        CHECK(dual(Norm::L1) == Norm::Linf);
        CHECK(dual(Norm::L2) == Norm::L2);
        CHECK(dual(Norm::Linf) == Norm::L1);
        CHECK(parse_norm("inf") == Norm::Linf);
        CHECK(parse_norm("1") == Norm::L1);
        CHECK_THROWS_AS(parse_norm("3"), UnsupportedError);
    }

    TEST_CASE("perturbation spec validation")
    {
        CHECK_THROWS(PerturbationSpec(Vector::Zero(2), Norm::Linf, -1.0).validate(2));
        CHECK_THROWS_AS(PerturbationSpec(Vector::Zero(3), Norm::Linf, 0.1).validate(2), ShapeError);
        CHECK_NOTHROW(PerturbationSpec(Vector::Zero(2), Norm::L2, 0.0).validate(2));
    }

    TEST_CASE("sample round trip")
    {
        const Sample s = load_sample(testing::fixture("linear_sample.json"));
        CHECK(s.label == 0);
        const Sample t = parse_sample(serialize_sample(s));
        CHECK(t.x0 == s.x0);
        CHECK(t.label == s.label);
    }
}
