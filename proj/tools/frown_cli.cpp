// Command-line front end: bounds, certify, bench, generate.

#include "frown/certify.hpp"
#include "frown/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace frown;
using nlohmann::json;

namespace {

struct OptimizerFlags
{
    std::size_t groupSize = 1;
    int iters = 100;
    double step = 0.05;
    int restarts = 1;
    std::uint64_t seed = 0;
    std::string lpMenu = "multi";

    void attach(CLI::App &app)
    {
        app.add_option("--group-size", groupSize, "Neurons optimized jointly by frown")->check(CLI::PositiveNumber);
        app.add_option("--iters", iters, "Projected-gradient iterations per group")->check(CLI::NonNegativeNumber);
        app.add_option("--step", step, "Step size, relative to each variable's interval")->check(CLI::PositiveNumber);
        app.add_option("--restarts", restarts, "Random restarts per group")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Seed for frown restarts");
        app.add_option("--lp-menu", lpMenu, "Lines per activation in the LP")->check(CLI::IsMember({"single", "multi"}));
    }

    certify::Settings settings() const
    {
        certify::Settings s;
        s.optimizer.groupSize = groupSize;
        s.optimizer.maxIters = iters;
        s.optimizer.stepSize = step;
        s.optimizer.restarts = restarts;
        s.optimizer.seed = seed;
        s.optimizer.validate();
        s.menu = lpMenu == "single" ? lp::RelaxationMenu::single() : lp::RelaxationMenu::multi();
        return s;
    }
};

void write_output(const std::string &text, const std::string &path)
{
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path + "'");
    out << text << '\n';
}

json to_json(const Vector &v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::size_t resolve_label(const Network &net, const Sample &sample, std::optional<std::size_t> override)
{
    const int predicted = predicted_label(net, sample.x0);
    const int label = override ? static_cast<int>(*override) : sample.label.value_or(predicted);
    if (label < 0 || static_cast<std::size_t>(label) >= net.outputSize())
        throw Error("label " + std::to_string(label) + " out of range");
    if (label != predicted)
        std::cerr << "warning: label " << label << " is not the prediction " << predicted
                  << " at x0; the certificate is vacuous\n";
    return static_cast<std::size_t>(label);
}

std::string significant(double value, int digits = 8)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", digits, value);
    return buffer;
}

int run_bounds(const std::string &netPath, const std::string &samplePath, double eps, const std::string &pName,
               const std::string &methodName, const std::string &modeName, bool allLayers, const OptimizerFlags &flags,
               const std::string &outPath)
{
    const Network net = load_network(netPath);
    const Sample sample = load_sample(samplePath);
    const PerturbationSpec spec(sample.x0, parse_norm(pName), eps);
    spec.validate(net.inputSize());
    const certify::Method method = certify::parse_method(methodName);
    const certify::Settings settings = flags.settings();

    crown::LayerBounds bounds;
    json extra = json::object();
    switch (method) {
    case certify::Method::Crown: {
        if (!modeName.empty() && modeName != "self-consistent" && modeName != "per-neuron")
            throw UnsupportedError("crown mode must be self-consistent or per-neuron");
        const auto mode = modeName == "per-neuron" ? crown::Mode::PerNeuron : crown::Mode::SelfConsistent;
        bounds = crown::propagate(net, spec, mode).bounds;
        break;
    }
    case certify::Method::Frown: {
        if (!modeName.empty() && modeName != "per-neuron")
            throw UnsupportedError("frown optimizes lines per neuron; no other mode");
        const tighten::Result result = tighten::frown_propagate(net, spec, settings.optimizer);
        bounds = result.bounds;
        extra["iterations"] = result.iterations;
        break;
    }
    case certify::Method::Lp: {
        if (!modeName.empty() && modeName != "baseline" && modeName != "crown-lines")
            throw UnsupportedError("lp mode must be baseline or crown-lines");
        const auto mode = modeName == "crown-lines" ? lp::Mode::CrownLines : lp::Mode::Baseline;
        const lp::Result result = lp::lp_propagate(net, spec, settings.menu, mode);
        bounds = result.bounds;
        extra["iterations"] = result.iterations;
        break;
    }
    }

    json doc;
    doc["method"] = std::string(certify::to_string(method));
    doc["p"] = std::string(to_string(spec.p));
    doc["epsilon"] = eps;
    doc["output"] = {{"lower", to_json(bounds.lower.back())}, {"upper", to_json(bounds.upper.back())}};
    if (allLayers) {
        doc["layers"] = json::array();
        for (std::size_t k = 0; k < bounds.layers(); ++k)
            doc["layers"].push_back({{"lower", to_json(bounds.lower[k])}, {"upper", to_json(bounds.upper[k])}});
    }
    doc.update(extra);
    write_output(doc.dump(1), outPath);
    return 0;
}

int run_certify(const std::string &netPath, const std::string &samplePath, const std::string &pName,
                const std::string &methodName, std::optional<std::size_t> target, std::optional<std::size_t> label,
                double relTol, double cap, const OptimizerFlags &flags, const std::string &outPath)
{
    const Network net = load_network(netPath);
    const Sample sample = load_sample(samplePath);
    const certify::Method method = certify::parse_method(methodName);
    const Norm p = parse_norm(pName);
    const std::size_t resolved = resolve_label(net, sample, label);
    const certify::Certificate c =
        certify::search_epsilon(net, sample.x0, resolved, p, method, target, relTol, cap, flags.settings());

    json doc;
    doc["epsilon"] = c.epsilon;
    doc["method"] = std::string(certify::to_string(c.method));
    doc["p"] = std::string(to_string(c.p));
    doc["label"] = c.label;
    doc["mode"] = c.target ? json{{"targeted", *c.target}} : json("untargeted");
    doc["margins"] = c.margins;
    doc["classes"] = c.classes;
    doc["seconds"] = c.seconds;
    doc["iterations"] = c.iterations;
    doc["cap_hit"] = c.capHit;
    doc["uncertified"] = c.uncertified;
    doc["label_mismatch"] = c.labelMismatch;
    write_output(doc.dump(1), outPath);
    return 0;
}

int run_bench(const std::string &configPath, const std::string &prefix, bool noTiming)
{
    std::ifstream in(configPath);
    if (!in)
        throw ParseError("cannot open '" + configPath + "'");
    std::ostringstream text;
    text << in.rdbuf();
    report::BenchConfig config =
        report::parse_bench_config(text.str(), std::filesystem::path(configPath).parent_path());
    if (noTiming)
        config.timing = false;

    const report::RunReport result = report::run_bench(config);
    {
        std::ofstream csv(prefix + ".csv");
        std::ofstream js(prefix + ".json");
        if (!csv || !js)
            throw Error("cannot write reports with prefix '" + prefix + "'");
        csv << result.toCsv();
        js << result.toJson() << '\n';
    }

    std::size_t failures = 0;
    for (const report::RunEntry &entry : result.entries) {
        if (!entry.error.empty()) {
            ++failures;
            std::cerr << "failed: " << entry.network << " sample " << entry.sample << " "
                      << certify::to_string(entry.method) << " p=" << to_string(entry.p) << ": " << entry.error
                      << '\n';
        }
    }
    for (const report::Cell &cell : result.cells()) {
        std::cout << cell.network << " p=" << to_string(cell.p);
        for (const auto &[method, summary] : cell.methods) {
            std::cout << "  " << certify::to_string(method) << "="
                      << (summary.populated() ? significant(summary.meanEpsilon) : std::string("-"));
            if (const auto improvement = cell.improvement(method); improvement && method != certify::Method::Crown)
                std::cout << " (" << significant(*improvement, 4) << "%)";
        }
        std::cout << '\n';
    }
    std::cout << "wrote " << prefix << ".csv and " << prefix << ".json";
    if (failures > 0)
        std::cout << " (" << failures << " failed runs)";
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Certified robustness bounds for feed-forward networks"};
    app.require_subcommand(1);

    CLI::App *bounds = app.add_subcommand("bounds", "Output (and layer) bounds at one radius");
    std::string netPath, samplePath, outPath, pName = "inf", methodName = "crown", modeName;
    double eps = 0.0;
    bool allLayers = false;
    OptimizerFlags boundsFlags;
    bounds->add_option("--net", netPath, "Network file")->required()->check(CLI::ExistingFile);
    bounds->add_option("--sample", samplePath, "Sample file")->required()->check(CLI::ExistingFile);
    bounds->add_option("--eps", eps, "Ball radius")->required()->check(CLI::NonNegativeNumber);
    bounds->add_option("--p", pName, "Norm order: 1, 2 or inf");
    bounds->add_option("--method", methodName, "crown, frown or lp");
    bounds->add_option("--mode", modeName, "crown: self-consistent|per-neuron; lp: baseline|crown-lines");
    bounds->add_flag("--all-layers", allLayers, "Also report every hidden layer");
    bounds->add_option("--out", outPath, "Output file (default stdout)");
    boundsFlags.attach(*bounds);

    CLI::App *cert = app.add_subcommand("certify", "Largest certified radius by binary search");
    std::string cNet, cSample, cOut, cP = "inf", cMethod = "crown";
    std::optional<std::size_t> targeted, label;
    double relTol = certify::kDefaultRelTol, cap = certify::kDefaultCap;
    OptimizerFlags certFlags;
    cert->add_option("--net", cNet, "Network file")->required()->check(CLI::ExistingFile);
    cert->add_option("--sample", cSample, "Sample file")->required()->check(CLI::ExistingFile);
    cert->add_option("--p", cP, "Norm order: 1, 2 or inf");
    cert->add_option("--method", cMethod, "crown, frown or lp");
    cert->add_option("--targeted", targeted, "Certify against this class only");
    cert->add_option("--label", label, "Override the sample label");
    cert->add_option("--rel-tol", relTol, "Relative bisection tolerance")->check(CLI::PositiveNumber);
    cert->add_option("--cap", cap, "Largest radius probed")->check(CLI::PositiveNumber);
    cert->add_option("--out", cOut, "Output file (default stdout)");
    certFlags.attach(*cert);

    CLI::App *bench = app.add_subcommand("bench", "Run a network x norm x method matrix");
    std::string configPath, prefix = "bench";
    bool noTiming = false;
    bench->add_option("config", configPath, "Bench config file")->required()->check(CLI::ExistingFile);
    bench->add_option("--out", prefix, "Report prefix; writes <prefix>.csv and <prefix>.json");
    bench->add_flag("--no-timing", noTiming, "Leave timing columns empty so reports are bit-reproducible");

    CLI::App *generate = app.add_subcommand("generate", "Write a seeded random network");
    std::uint64_t gSeed = 0;
    std::vector<std::size_t> widths;
    std::string activation = "relu", gOut;
    double scale = 1.0;
    generate->add_option("--seed", gSeed, "Seed");
    generate->add_option("--widths", widths, "Input width followed by every layer width")->required()->expected(3, -1);
    generate->add_option("--activation", activation, "relu, sigmoid or tanh");
    generate->add_option("--scale", scale, "Entries uniform in [-scale, scale]")->check(CLI::PositiveNumber);
    generate->add_option("--out", gOut, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bounds->parsed())
            return run_bounds(netPath, samplePath, eps, pName, methodName, modeName, allLayers, boundsFlags, outPath);
        if (cert->parsed())
            return run_certify(cNet, cSample, cP, cMethod, targeted, label, relTol, cap, certFlags, cOut);
        if (bench->parsed())
            return run_bench(configPath, prefix, noTiming);
        if (generate->parsed()) {
            write_output(serialize_network(generate_random_network(gSeed, widths, parse_activation(activation), scale)),
                         gOut);
            return 0;
        }
    } catch (const UnsupportedError &e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
