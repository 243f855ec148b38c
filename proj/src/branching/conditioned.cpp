#include "pdl/branching/conditioned.hpp"

#include <algorithm>
#include <cmath>

#include "pdl/kernel/errors.hpp"

namespace pdl::branching {

std::string to_string(Model m) {
    switch (m) {
    case Model::Branching: return "branching";
    case Model::Genealogy: return "genealogy";
    case Model::Brw: return "brw";
    }
    return "?";
}

Model parse_model(const std::string& s) {
    if (s == "branching") return Model::Branching;
    if (s == "genealogy") return Model::Genealogy;
    if (s == "brw") return Model::Brw;
    throw ParameterError("unknown model '" + s + "'");
}

std::string to_string(Method m) {
    return m == Method::Plain ? "plain" : "size_biased";
}

OffspringDist ModelSpec::count_dist() const {
    if (model == Model::Brw) return OffspringDist({1 / (1 + lambda), 0.0, lambda / (1 + lambda)});
    return dist;
}

double ModelSpec::count_rate() const {
    switch (model) {
    case Model::Branching: return rate;
    case Model::Genealogy: return 1.0;
    case Model::Brw: return 1 + lambda;
    }
    return 1.0;
}

std::uint64_t ModelSpec::initial_population() const {
    switch (model) {
    case Model::Branching: return initial_count;
    case Model::Genealogy: return initial_tree.alive_leaves().size();
    case Model::Brw: return initial_sites.size();
    }
    return 0;
}

std::size_t ModelSpec::founders() const {
    switch (model) {
    case Model::Branching: return initial_count > 0 ? 1 : 0;
    case Model::Genealogy: return initial_tree.founders_alive();
    case Model::Brw: return initial_sites.size();
    }
    return 0;
}

void ModelSpec::validate() const {
    if (model == Model::Branching && !(rate > 0)) throw ParameterError("model: rate must be > 0");
    if (model == Model::Brw) {
        if (dim < 1 || dim > kMaxDim) throw ParameterError("model: dim must be 1..3");
        if (!(lambda >= 0)) throw ParameterError("model: lambda must be >= 0");
    }
    if (initial_population() == 0) throw ParameterError("model: empty initial state");
}

std::optional<std::string> yaglom_sample(const ModelSpec& spec, double t, kernel::Stream& s) {
    switch (spec.model) {
    case Model::Branching: {
        const auto n = simulate_count(spec.initial_count, spec.dist, t, s, spec.rate);
        if (n == 0) return std::nullopt;
        return std::to_string(n);
    }
    case Model::Genealogy: {
        const auto tree = evolve_genealogy(spec.initial_tree, spec.dist, s, t);
        if (tree.empty()) return std::nullopt;
        return canonical_tree(tree);
    }
    case Model::Brw: {
        const auto run = simulate_brw(spec.dim, spec.initial_sites, spec.lambda, t, s, {Tilt::None, false});
        if (run.final.empty()) return std::nullopt;
        return canonical_brw(run.final).encode();
    }
    }
    return std::nullopt;
}

YaglomEstimate yaglom_estimate(const ModelSpec& spec, double t, std::uint64_t reps, const kernel::StreamKey& key) {
    spec.validate();
    if (reps < 1) throw ParameterError("yaglom_estimate: reps must be >= 1");
    if (spec.count_dist().mean() >= 1) throw ParameterError("yaglom_estimate: model is not subcritical");
    YaglomEstimate est;
    est.reps = reps;
    for (std::uint64_t r = 0; r < reps; ++r) {
        kernel::Stream s(key.child(r));
        if (auto state = yaglom_sample(spec, t, s)) {
            ++est.counts[*state];
            ++est.survivors;
        }
    }
    est.survival = static_cast<double>(est.survivors) / static_cast<double>(reps);
    if (est.survivors == 0)
        throw InsufficientData("yaglom_estimate: no run survived to t (survival fraction 0 of " + std::to_string(reps) + ")");
    for (const auto& [k, c] : est.counts) est.law[k] = static_cast<double>(c) / static_cast<double>(est.survivors);
    return est;
}

std::size_t tree_alive_count(const std::string& encoding) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < encoding.size(); ++i)
        if (encoding[i] == '(' && encoding[i + 1] == 'a') ++n;
    return n;
}

harness::Distribution project_tree_law(const harness::Distribution& law) {
    harness::Distribution out;
    for (const auto& [k, p] : law) out[std::to_string(tree_alive_count(k))] += p;
    return out;
}

harness::Distribution count_law(const std::vector<double>& nu, double floor) {
    harness::Distribution out;
    for (std::size_t j = 0; j < nu.size(); ++j)
        if (nu[j] > floor) out[std::to_string(j + 1)] = nu[j];
    return out;
}

void AlternationScanner::observe(std::uint64_t count) {
    if (done()) return;
    if (!want_two_ && count == 1) {
        want_two_ = true;
    } else if (want_two_ && count == 2) {
        want_two_ = false;
        ++pairs_;
    }
}

namespace {

// Self-normalized estimate of E_w[f] from (w, f) pairs.
struct RatioAccumulator {
    std::vector<double> w, f;
    void add(double wi, double fi) {
        w.push_back(wi);
        f.push_back(fi);
    }
    double sum_w() const {
        double s = 0;
        for (double x : w) s += x;
        return s;
    }
    std::pair<double, double> mean_se() const {
        const double sw = sum_w();
        double num = 0;
        for (std::size_t i = 0; i < w.size(); ++i) num += w[i] * f[i];
        const double p = num / sw;
        double v = 0;
        for (std::size_t i = 0; i < w.size(); ++i) v += (w[i] * (f[i] - p)) * (w[i] * (f[i] - p));
        return {p, std::sqrt(v) / sw};
    }
};

harness::MeanEstimate mean_of(const std::vector<double>& xs, double level) {
    return harness::mean_ci(xs, level);
}

void fill_normal_ci(ConditionalEstimate& e, double level) {
    const double z = harness::normal_quantile(0.5 + level / 2);
    e.lo = std::clamp(e.p - z * e.se, 0.0, 1.0);
    e.hi = std::clamp(e.p + z * e.se, 0.0, 1.0);
}

void check_subcritical_start(const ModelSpec& spec, const char* who) {
    spec.validate();
    if (spec.count_dist().mean() >= 1) throw ParameterError(std::string(who) + ": model is not subcritical");
}

} // namespace

ConditionalEstimate estimate_G(const ModelSpec& spec, double t, unsigned k, std::uint64_t reps,
                               const kernel::StreamKey& key, Method method, double level) {
    check_subcritical_start(spec, "estimate_G");
    if (spec.initial_population() != 1) throw ParameterError("estimate_G: initial state must be 1");
    if (reps < 1) throw ParameterError("estimate_G: reps must be >= 1");
    const OffspringDist dist = spec.count_dist();
    const double rate = spec.count_rate();
    ConditionalEstimate e;
    e.reps = reps;
    e.method = method;
    if (method == Method::Plain) {
        std::uint64_t hits = 0;
        for (std::uint64_t r = 0; r < reps; ++r) {
            kernel::Stream s(key.child(r));
            AlternationScanner scan(k);
            scan.observe(1);
            const auto n = simulate_count(1, dist, t, s, rate, [&](double, std::uint64_t c) { scan.observe(c); });
            if (n == 0) continue;
            ++e.survivors;
            if (scan.done()) ++hits;
        }
        e.survival = static_cast<double>(e.survivors) / static_cast<double>(reps);
        if (e.survivors == 0) throw InsufficientData("estimate_G: no surviving runs out of " + std::to_string(reps));
        e.p = static_cast<double>(hits) / static_cast<double>(e.survivors);
        e.se = std::sqrt(e.p * (1 - e.p) / static_cast<double>(e.survivors));
        const auto ci = harness::binomial_ci(hits, e.survivors, level);
        e.lo = ci.lo;
        e.hi = ci.hi;
        return e;
    }
    RatioAccumulator acc;
    for (std::uint64_t r = 0; r < reps; ++r) {
        kernel::Stream s(key.child(r));
        AlternationScanner scan(k);
        scan.observe(1);
        const auto n =
            simulate_count_size_biased(1, dist, t, s, rate, [&](double, std::uint64_t c) { scan.observe(c); });
        acc.add(1.0 / static_cast<double>(n), scan.done() ? 1.0 : 0.0);
    }
    e.survivors = reps;
    e.survival = std::exp(-(1 - dist.mean()) * rate * t) * acc.sum_w() / static_cast<double>(reps);
    std::tie(e.p, e.se) = acc.mean_se();
    fill_normal_ci(e, level);
    return e;
}

namespace {

struct OtSample {
    bool survived = false;
    std::vector<std::uint64_t> per_founder;
    long diameter = 0;
};

OtSample ot_run(const ModelSpec& spec, double t, kernel::Stream& s, Tilt tilt) {
    OtSample out;
    const std::size_t f = spec.founders();
    out.per_founder.assign(f, 0);
    if (spec.model == Model::Genealogy) {
        GenealogyOptions opts;
        opts.tilt = tilt;
        const auto tree = evolve_genealogy(spec.initial_tree, spec.dist, s, t, opts);
        if (tree.empty()) return out;
        out.survived = true;
        for (auto v : tree.alive_leaves()) ++out.per_founder.at(tree.founder(v));
        out.diameter = static_cast<long>(tree_stats(tree).diameter);
    } else if (spec.model == Model::Brw) {
        const auto run = simulate_brw(spec.dim, spec.initial_sites, spec.lambda, t, s, {tilt, false});
        if (run.final.empty()) return out;
        out.survived = true;
        out.per_founder = run.alive_per_founder;
        out.diameter = run.final.support_diameter();
    } else {
        throw ParameterError("o_t_probability: model must be genealogy or brw");
    }
    return out;
}

std::size_t founders_alive(const OtSample& x) {
    std::size_t n = 0;
    for (auto c : x.per_founder) n += c > 0;
    return n;
}

} // namespace

OtEstimate o_t_probability(const ModelSpec& spec, double t, std::uint64_t reps, const kernel::StreamKey& key,
                           Method method, double level) {
    check_subcritical_start(spec, "o_t_probability");
    if (spec.model == Model::Branching) throw ParameterError("o_t_probability: model must be genealogy or brw");
    if (reps < 1) throw ParameterError("o_t_probability: reps must be >= 1");
    OtEstimate out;
    out.oc.reps = reps;
    out.oc.method = method;
    std::vector<double> diam;
    if (method == Method::Plain) {
        std::uint64_t hits = 0;
        for (std::uint64_t r = 0; r < reps; ++r) {
            kernel::Stream s(key.child(r));
            const auto x = ot_run(spec, t, s, Tilt::None);
            if (!x.survived) continue;
            ++out.oc.survivors;
            if (founders_alive(x) >= 2) {
                ++hits;
                out.diameter_law[x.diameter] += 1;
                diam.push_back(static_cast<double>(x.diameter));
            }
        }
        out.oc.survival = static_cast<double>(out.oc.survivors) / static_cast<double>(reps);
        if (out.oc.survivors == 0)
            throw InsufficientData("o_t_probability: no surviving runs out of " + std::to_string(reps));
        out.oc.p = static_cast<double>(hits) / static_cast<double>(out.oc.survivors);
        out.oc.se = std::sqrt(out.oc.p * (1 - out.oc.p) / static_cast<double>(out.oc.survivors));
        const auto ci = harness::binomial_ci(hits, out.oc.survivors, level);
        out.oc.lo = ci.lo;
        out.oc.hi = ci.hi;
        out.oc_runs = hits;
        for (auto& kv : out.diameter_law) kv.second /= static_cast<double>(std::max<std::uint64_t>(hits, 1));
        if (diam.size() >= 2) {
            const auto m = mean_of(diam, level);
            out.mean_diameter = m.mean;
            out.mean_diameter_se = m.se;
        } else if (diam.size() == 1) {
            out.mean_diameter = diam[0];
        }
        return out;
    }

    if (spec.founders() != 2 || spec.initial_population() != 2)
        throw ParameterError("o_t_probability: size-biased estimation needs two founders of one individual each");
    const OffspringDist dist = spec.count_dist();
    const double rate = spec.count_rate();
    const double decay = std::exp(-(1 - dist.mean()) * rate * t);
    // Both lines survive: product tilt, weight decay^2 / (X1 X2).
    std::vector<double> a(reps);
    RatioAccumulator dacc;
    for (std::uint64_t r = 0; r < reps; ++r) {
        kernel::Stream s(key.child(r));
        const auto x = ot_run(spec, t, s, Tilt::SpinePerFounder);
        const double w = 1.0 / (static_cast<double>(x.per_founder[0]) * static_cast<double>(x.per_founder[1]));
        a[r] = decay * decay * w;
        dacc.add(w, static_cast<double>(x.diameter));
        out.diameter_law[x.diameter] += w;
    }
    // One line survives: single tilt on the count.
    std::vector<double> single(reps);
    const auto skey = key.child("single");
    for (std::uint64_t r = 0; r < reps; ++r) {
        kernel::Stream s(skey.child(r));
        single[r] = decay / static_cast<double>(simulate_count_size_biased(1, dist, t, s, rate));
    }
    const auto am = harness::mean_ci(a, level);
    const auto sm = harness::mean_ci(single, level);
    const double sv = sm.mean;
    const double d = 1 - (1 - sv) * (1 - sv);
    const double dd = 2 - 2 * sv;
    out.oc.p = am.mean / d;
    out.oc.se = std::sqrt(am.se * am.se / (d * d) + am.mean * am.mean * dd * dd * sm.se * sm.se / (d * d * d * d));
    out.oc.survival = d;
    out.oc.survivors = reps;
    fill_normal_ci(out.oc, level);
    out.oc_runs = reps;
    const double sw = dacc.sum_w();
    for (auto& kv : out.diameter_law) kv.second /= sw;
    std::tie(out.mean_diameter, out.mean_diameter_se) = dacc.mean_se();
    return out;
}

} // namespace pdl::branching
