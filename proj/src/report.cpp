#include "frown/report.hpp"

#include "frown/parallel.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace frown::report {

using nlohmann::json;

std::string format_number(double value)
{
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc())
        return "nan";
    return std::string(buffer, end);
}

std::optional<double> Cell::improvement(Method method) const
{
    const auto base = methods.find(Method::Crown);
    const auto other = methods.find(method);
    if (base == methods.end() || other == methods.end() || !base->second.populated() || !other->second.populated() ||
        base->second.meanEpsilon == 0.0)
        return std::nullopt;
    return 100.0 * (other->second.meanEpsilon - base->second.meanEpsilon) / base->second.meanEpsilon;
}

std::optional<double> Cell::speedupFrownOverLp() const
{
    const auto frown = methods.find(Method::Frown);
    const auto lp = methods.find(Method::Lp);
    if (frown == methods.end() || lp == methods.end() || !frown->second.populated() || !lp->second.populated() ||
        frown->second.meanSeconds <= 0.0)
        return std::nullopt;
    return lp->second.meanSeconds / frown->second.meanSeconds;
}

std::vector<Cell> RunReport::cells() const
{
    std::vector<Cell> result;
    auto find = [&](const std::string &network, Norm p) -> Cell & {
        for (Cell &cell : result)
            if (cell.network == network && cell.p == p)
                return cell;
        Cell cell;
        cell.network = network;
        cell.p = p;
        for (const Method method : methods)
            cell.methods[method];
        result.push_back(std::move(cell));
        return result.back();
    };

    for (const RunEntry &entry : entries) {
        MethodSummary &summary = find(entry.network, entry.p).methods[entry.method];
        if (!entry.error.empty()) {
            ++summary.failures;
            continue;
        }
        ++summary.runs;
        summary.meanEpsilon += entry.epsilon;
        summary.meanSeconds += entry.seconds;
    }
    for (Cell &cell : result) {
        for (auto &[method, summary] : cell.methods) {
            if (summary.runs > 0) {
                summary.meanEpsilon /= static_cast<double>(summary.runs);
                summary.meanSeconds /= static_cast<double>(summary.runs);
            }
        }
    }
    return result;
}

std::string RunReport::toCsv() const
{
    std::ostringstream out;
    out << "network,p";
    for (const Method method : methods)
        out << ",bound_" << certify::to_string(method);
    for (const Method method : methods)
        if (method != Method::Crown)
            out << ",improvement_" << certify::to_string(method);
    for (const Method method : methods)
        out << ",time_" << certify::to_string(method);
    out << ",speedup_frown_over_lp\n";

    auto optional = [](std::optional<double> value) { return value ? format_number(*value) : std::string(); };
    for (const Cell &cell : cells()) {
        out << cell.network << ',' << to_string(cell.p);
        for (const Method method : methods) {
            const MethodSummary &summary = cell.methods.at(method);
            out << ',' << (summary.populated() ? format_number(summary.meanEpsilon) : std::string());
        }
        for (const Method method : methods)
            if (method != Method::Crown)
                out << ',' << optional(cell.improvement(method));
        for (const Method method : methods) {
            const MethodSummary &summary = cell.methods.at(method);
            out << ',' << (timing && summary.populated() ? format_number(summary.meanSeconds) : std::string());
        }
        out << ',' << (timing ? optional(cell.speedupFrownOverLp()) : std::string()) << '\n';
    }
    return out.str();
}

std::string RunReport::toJson() const
{
    json doc;
    doc["methods"] = json::array();
    for (const Method method : methods)
        doc["methods"].push_back(std::string(certify::to_string(method)));
    doc["runs"] = json::array();
    for (const RunEntry &entry : entries) {
        json run;
        run["network"] = entry.network;
        run["sample"] = entry.sample;
        run["method"] = std::string(certify::to_string(entry.method));
        run["p"] = std::string(to_string(entry.p));
        run["epsilon"] = entry.epsilon;
        run["seconds"] = timing ? json(entry.seconds) : json(nullptr);
        run["iterations"] = entry.iterations;
        run["cap_hit"] = entry.capHit;
        run["uncertified"] = entry.uncertified;
        if (!entry.error.empty())
            run["error"] = entry.error;
        doc["runs"].push_back(std::move(run));
    }
    doc["cells"] = json::array();
    for (const Cell &cell : cells()) {
        json row;
        row["network"] = cell.network;
        row["p"] = std::string(to_string(cell.p));
        for (const auto &[method, summary] : cell.methods) {
            json m;
            m["mean_epsilon"] = summary.populated() ? json(summary.meanEpsilon) : json(nullptr);
            m["mean_seconds"] = timing && summary.populated() ? json(summary.meanSeconds) : json(nullptr);
            m["runs"] = summary.runs;
            m["failures"] = summary.failures;
            if (const auto improvement = cell.improvement(method); improvement && method != Method::Crown)
                m["improvement_percent"] = *improvement;
            row[std::string(certify::to_string(method))] = std::move(m);
        }
        if (const auto speedup = cell.speedupFrownOverLp(); speedup && timing)
            row["speedup_frown_over_lp"] = *speedup;
        doc["cells"].push_back(std::move(row));
    }
    return doc.dump(1);
}

namespace {

std::vector<std::string> split(const std::string &line, char separator)
{
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(line);
    while (std::getline(in, part, separator))
        parts.push_back(part);
    if (!line.empty() && line.back() == separator)
        parts.emplace_back();
    return parts;
}

double parse_double(const std::string &text)
{
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ParseError("bad number '" + text + "' in CSV");
    return value;
}

} // namespace

std::vector<std::map<Method, double>> parse_csv_bounds(const std::string &csv)
{
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty CSV");
    const std::vector<std::string> header = split(line, ',');
    std::vector<std::pair<std::size_t, Method>> columns;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c].rfind("bound_", 0) == 0)
            columns.emplace_back(c, certify::parse_method(header[c].substr(6)));

    std::vector<std::map<Method, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const std::vector<std::string> fields = split(line, ',');
        std::map<Method, double> row;
        for (const auto &[c, method] : columns)
            if (c < fields.size() && !fields[c].empty())
                row[method] = parse_double(fields[c]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Sample> random_samples(const Network &net, std::size_t count, std::uint64_t seed, double low, double high)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(low, high);
    std::vector<Sample> samples;
    for (std::size_t s = 0; s < count; ++s) {
        Sample sample;
        sample.x0.resize(static_cast<Eigen::Index>(net.inputSize()));
        for (Eigen::Index j = 0; j < sample.x0.size(); ++j)
            sample.x0[j] = uniform(rng);
        sample.label = predicted_label(net, sample.x0);
        samples.push_back(std::move(sample));
    }
    return samples;
}

namespace {


std::filesystem::path resolve(const std::filesystem::path &baseDir, const std::string &path)
{
    const std::filesystem::path candidate(path);
    return candidate.is_absolute() || baseDir.empty() ? candidate : baseDir / candidate;
}

} // namespace

BenchConfig parse_bench_config(const std::string &text, const std::filesystem::path &baseDir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("malformed bench config: ") + e.what());
    }

    BenchConfig config;
    try {
        for (const json &name : doc.at("methods"))
            config.methods.push_back(certify::parse_method(name.get<std::string>()));
        for (const json &name : doc.at("norms"))
            config.norms.push_back(parse_norm(name.is_string() ? name.get<std::string>() : name.dump()));
        config.relTol = doc.value("rel_tol", config.relTol);
        config.cap = doc.value("cap", config.cap);
        config.timing = doc.value("timing", config.timing);
        if (doc.contains("frown")) {
            const json &f = doc["frown"];
            tighten::OptimizerConfig &optimizer = config.settings.optimizer;
            optimizer.stepSize = f.value("step", optimizer.stepSize);
            optimizer.maxIters = f.value("iters", optimizer.maxIters);
            optimizer.restarts = f.value("restarts", optimizer.restarts);
            optimizer.groupSize = f.value("group_size", optimizer.groupSize);
            optimizer.improvementTol = f.value("tol", optimizer.improvementTol);
            optimizer.seed = f.value("seed", optimizer.seed);
            optimizer.validate();
        }
        const std::string menu = doc.value("lp_menu", std::string("multi"));
        if (menu == "single")
            config.settings.menu = lp::RelaxationMenu::single();
        else if (menu == "multi")
            config.settings.menu = lp::RelaxationMenu::multi();
        else
            throw ParseError("lp_menu must be 'single' or 'multi'");

        for (const json &entry : doc.at("networks")) {
            const std::string name = entry.at("name").get<std::string>();
            std::optional<Network> net;
            if (entry.contains("path")) {
                net = load_network(resolve(baseDir, entry["path"].get<std::string>()));
            } else if (entry.contains("generate")) {
                const json &g = entry["generate"];
                net = generate_random_network(g.at("seed").get<std::uint64_t>(),
                                              g.at("widths").get<std::vector<std::size_t>>(),
                                              parse_activation(g.at("activation").get<std::string>()),
                                              g.value("scale", 1.0));
            } else {
                throw ParseError("network '" + name + "' needs 'path' or 'generate'");
            }

            std::vector<Sample> samples;
            if (entry.contains("samples")) {
                for (const json &s : entry["samples"])
                    samples.push_back(parse_sample(s.dump()));
            }
            if (entry.contains("sample_paths")) {
                for (const json &path : entry["sample_paths"])
                    samples.push_back(load_sample(resolve(baseDir, path.get<std::string>())));
            }
            if (entry.contains("random_samples")) {
                const json &r = entry["random_samples"];
                const auto more = random_samples(*net, r.at("count").get<std::size_t>(), r.value("seed", 0ULL),
                                                 r.value("low", 0.0), r.value("high", 1.0));
                samples.insert(samples.end(), more.begin(), more.end());
            }
            if (samples.empty())
                throw ParseError("network '" + name + "' has no samples");
            config.networks.push_back({name, std::move(*net), std::move(samples)});
        }
    } catch (const json::exception &e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    return config;
}

RunReport run_bench(const BenchConfig &config)
{
    struct Task
    {
        std::size_t network;
        std::size_t sample;
        Norm p;
        Method method;
    };
    std::vector<Task> tasks;
    for (std::size_t n = 0; n < config.networks.size(); ++n)
        for (const Norm p : config.norms)
            for (std::size_t s = 0; s < config.networks[n].samples.size(); ++s)
                for (const Method method : config.methods)
                    tasks.push_back({n, s, p, method});

    RunReport report;
    report.methods = config.methods;
    report.timing = config.timing;
    report.entries.resize(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t t) {
        const Task &task = tasks[t];
        const NetworkEntry &entry = config.networks[task.network];
        const Sample &sample = entry.samples[task.sample];
        RunEntry &run = report.entries[t];
        run.network = entry.name;
        run.sample = task.sample;
        run.method = task.method;
        run.p = task.p;
        try {
            const std::size_t label =
                sample.label ? static_cast<std::size_t>(*sample.label)
                             : static_cast<std::size_t>(predicted_label(entry.net, sample.x0));
            const certify::Certificate certificate =
                certify::search_epsilon(entry.net, sample.x0, label, task.p, task.method, std::nullopt, config.relTol,
                                        config.cap, config.settings);
            run.epsilon = certificate.epsilon;
            run.seconds = certificate.seconds;
            run.iterations = certificate.iterations;
            run.capHit = certificate.capHit;
            run.uncertified = certificate.uncertified;
        } catch (const std::exception &e) {
            run.error = e.what();
        }
    });
    return report;
}

} // namespace frown::report
