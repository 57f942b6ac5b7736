#include "frown/certify.hpp"

#include <chrono>

namespace frown::certify {

std::string_view to_string(Method method)
{
    switch (method) {
    case Method::Crown: return "crown";
    case Method::Frown: return "frown";
    case Method::Lp: return "lp";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    if (name == "crown") return Method::Crown;
    if (name == "frown") return Method::Frown;
    if (name == "lp") return Method::Lp;
    throw UnsupportedError("unknown method '" + std::string(name) + "' (expected crown, frown or lp)");
}

OutputBounds output_bounds(const Network &net, const PerturbationSpec &spec, Method method, const Settings &settings)
{
    switch (method) {
    case Method::Crown: {
        const crown::Result result = crown::propagate(net, spec);
        return {result.bounds.lower.back(), result.bounds.upper.back()};
    }
    case Method::Frown: {
        const tighten::Result result = tighten::frown_propagate(net, spec, settings.optimizer);
        return {result.bounds.lower.back(), result.bounds.upper.back()};
    }
    case Method::Lp: {
        const lp::Result result = lp::lp_propagate(net, spec, settings.menu);
        return {result.outputLower, result.outputUpper};
    }
    }
    throw Error("unknown method");
}

Check certified_at(const Network &net, const Vector &x0, std::size_t label, double epsilon, Norm p, Method method,
                   std::optional<std::size_t> target, const Settings &settings)
{
    if (method == Method::Lp && p == Norm::L2)
        throw UnsupportedError("method lp does not support p = 2");
    const std::size_t classes = net.outputSize();
    if (label >= classes)
        throw Error("label " + std::to_string(label) + " out of range");
    if (target && (*target >= classes || *target == label))
        throw Error("target class must be a valid class other than the label");

    Check check;
    check.labelMismatch = predicted_label(net, x0) != static_cast<int>(label);
    check.bounds = output_bounds(net, PerturbationSpec(x0, p, epsilon), method, settings);
    const std::vector<double> all = crown::margins(check.bounds.lower, check.bounds.upper, label);
    std::size_t slot = 0;
    for (std::size_t j = 0; j < classes; ++j) {
        if (j == label)
            continue;
        if (!target || *target == j) {
            check.margins.push_back(all[slot]);
            check.classes.push_back(j);
        }
        ++slot;
    }
    check.certified = true;
    for (const double margin : check.margins)
        check.certified = check.certified && margin >= 0.0;
    return check;
}

Certificate search_epsilon(const Network &net, const Vector &x0, std::size_t label, Norm p, Method method,
                           std::optional<std::size_t> target, double relTol, double cap, const Settings &settings)
{
    if (!(relTol > 0.0))
        throw Error("relative tolerance must be positive");
    if (!(cap > 0.0))
        throw Error("cap must be positive");

    const auto started = std::chrono::steady_clock::now();
    Certificate certificate;
    certificate.method = method;
    certificate.p = p;
    certificate.target = target;
    certificate.label = label;

    std::optional<Check> best;
    auto probe = [&](double epsilon) {
        ++certificate.iterations;
        Check check = certified_at(net, x0, label, epsilon, p, method, target, settings);
        certificate.labelMismatch = check.labelMismatch;
        if (check.certified)
            best = check;
        return check.certified;
    };
    auto finish = [&](double epsilon) {
        certificate.epsilon = epsilon;
        if (best) {
            certificate.margins = best->margins;
            certificate.classes = best->classes;
        }
        certificate.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return certificate;
    };

    double lo = 0.0;
    double hi = 0.0;
    double epsilon = std::min(kStartRadius, cap);
    if (probe(epsilon)) {
        lo = epsilon;
        while (true) {
            const double next = std::min(2.0 * lo, cap);
            if (next <= lo) {
                certificate.capHit = true;
                return finish(lo);
            }
            if (!probe(next)) {
                hi = next;
                break;
            }
            lo = next;
        }
    } else {
        hi = epsilon;
        for (int halving = 0; halving < kMaxHalvings; ++halving) {
            epsilon *= 0.5;
            if (probe(epsilon)) {
                lo = epsilon;
                break;
            }
            hi = epsilon;
        }
        if (lo == 0.0) {
            certificate.uncertified = true;
            best.reset();
            return finish(0.0);
        }
    }

    while ((hi - lo) > relTol * lo) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid))
            lo = mid;
        else
            hi = mid;
    }
    return finish(lo);
}

} // namespace frown::certify
