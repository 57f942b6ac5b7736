#pragma once

#include "frown/model.hpp"

#include <random>
#include <string>

namespace testing {

inline std::string fixture(const std::string &name)
{
    return std::string(FROWN_FIXTURES) + "/" + name;
}

inline frown::Network toy_relu()
{
    return frown::load_network(fixture("toy_relu.json"));
}

/// F(x) = (x, -x) through a relu layer that never leaves its linear piece.
inline frown::Network linear_net()
{
    return frown::load_network(fixture("linear.json"));
}

inline frown::Vector random_point(std::size_t n, std::uint64_t seed, double scale = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-scale, scale);
    frown::Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = uniform(rng);
    return x;
}

} // namespace testing
