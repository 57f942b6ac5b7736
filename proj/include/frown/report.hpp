#pragma once

// Benchmark matrix (networks x samples x norms x methods) and the summary
// tables it produces.

#include "frown/certify.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace frown::report {

using certify::Method;

/// One certification run.
struct RunEntry
{
    std::string network;
    std::size_t sample = 0;
    Method method = Method::Crown;
    Norm p = Norm::Linf;
    double epsilon = 0.0;
    double seconds = 0.0;
    int iterations = 0;
    bool capHit = false;
    bool uncertified = false;
    /// Non-empty when the run failed; the cell records it and the bench moves on.
    std::string error;
};

/// Averages over the samples of one (network, p) row for one method.
struct MethodSummary
{
    double meanEpsilon = 0.0;
    double meanSeconds = 0.0;
    std::size_t runs = 0;
    std::size_t failures = 0;
    bool populated() const { return runs > 0; }
};

struct Cell
{
    std::string network;
    Norm p = Norm::Linf;
    std::map<Method, MethodSummary> methods;

    /// 100 * (eps_method - eps_crown) / eps_crown; absent without both radii.
    std::optional<double> improvement(Method method) const;
    /// time(lp) / time(frown).
    std::optional<double> speedupFrownOverLp() const;
};

struct RunReport
{
    std::vector<Method> methods;
    std::vector<RunEntry> entries;
    bool timing = true;

    std::vector<Cell> cells() const;

    /// network,p,bound_<m>...,improvement_<m>...,time_<m>...,speedup_frown_over_lp
    /// Numbers carry full round-trip precision; timing columns are blank when
    /// timing is off.
    std::string toCsv() const;
    std::string toJson() const;
};

/// Parses the bound_<method> columns of a toCsv() table: [row][method] -> radius.
std::vector<std::map<Method, double>> parse_csv_bounds(const std::string &csv);

struct NetworkEntry
{
    std::string name;
    Network net;
    std::vector<Sample> samples;
};

struct BenchConfig
{
    std::vector<NetworkEntry> networks;
    std::vector<Method> methods;
    std::vector<Norm> norms;
    certify::Settings settings;
    double relTol = certify::kDefaultRelTol;
    double cap = certify::kDefaultCap;
    bool timing = true;
};

/// JSON document:
///   { "networks": [ {"name", "path" | "generate": {seed, widths, activation, scale},
///                    "samples": [{"x0", "label"}...] | "sample_paths": [...]
///                    | "random_samples": {count, seed, low, high}} ],
///     "methods": [...], "norms": [...], "rel_tol", "cap", "timing",
///     "frown": {"step", "iters", "restarts", "group_size", "tol", "seed"},
///     "lp_menu": "single" | "multi" }
/// Relative paths resolve against `baseDir`.
BenchConfig parse_bench_config(const std::string &text, const std::filesystem::path &baseDir = {});

/// Runs every (network, sample, norm, method) combination on the worker
/// pool. Failing runs are recorded in their entry, never thrown.
RunReport run_bench(const BenchConfig &config);

/// Samples with x0 uniform in [low, high]^n labelled by the network's prediction.
std::vector<Sample> random_samples(const Network &net, std::size_t count, std::uint64_t seed, double low,
                                   double high);

std::string format_number(double value);

} // namespace frown::report
