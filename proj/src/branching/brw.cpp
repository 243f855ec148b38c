#include "pdl/branching/brw.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::branching {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw ParameterError("brw: dimension must be 1..3");
}

Site neighbour(const Site& x, int dim, kernel::Stream& s) {
    const auto k = s.uniform_index(2 * static_cast<std::uint64_t>(dim));
    Site y = x;
    y[k / 2] += (k % 2 == 0) ? 1 : -1;
    return y;
}

} // namespace

std::uint64_t BrwConfig::particles() const {
    std::uint64_t n = 0;
    for (const auto& kv : occupancy) n += kv.second;
    return n;
}

void BrwConfig::add(const Site& x, std::uint64_t n) {
    if (n > 0) occupancy[x] += n;
}

void BrwConfig::remove(const Site& x) {
    auto it = occupancy.find(x);
    if (it == occupancy.end()) throw ParameterError("brw: removing from an empty site");
    if (--it->second == 0) occupancy.erase(it);
}

std::string BrwConfig::encode() const {
    std::ostringstream os;
    os << dim << '|';
    bool first = true;
    for (const auto& [x, n] : occupancy) {
        if (!first) os << ';';
        first = false;
        for (int i = 0; i < dim; ++i) os << (i ? "," : "") << x[i];
        os << ':' << n;
    }
    return os.str();
}

long BrwConfig::support_diameter() const {
    long best = 0;
    for (auto a = occupancy.begin(); a != occupancy.end(); ++a) {
        for (auto b = std::next(a); b != occupancy.end(); ++b) {
            long d = 0;
            for (int i = 0; i < dim; ++i) d += std::labs(a->first[i] - b->first[i]);
            best = std::max(best, d);
        }
    }
    return best;
}

BrwConfig canonical_brw(const BrwConfig& config) {
    BrwConfig out;
    out.dim = config.dim;
    out.canonical = true;
    if (config.empty()) return out;
    const Site anchor = config.occupancy.begin()->first;
    for (const auto& [x, n] : config.occupancy) {
        Site y{};
        for (int i = 0; i < kMaxDim; ++i) y[i] = x[i] - anchor[i];
        out.occupancy.emplace(y, n);
    }
    return out;
}

BrwEvent step_brw(BrwConfig& config, double lambda, kernel::Stream& s) {
    check_dim(config.dim);
    if (!(lambda >= 0)) throw ParameterError("step_brw: lambda must be >= 0");
    const std::uint64_t n = config.particles();
    if (n == 0) throw AbsorbedError("step_brw: empty configuration");
    BrwEvent e;
    e.dt = kernel::sample_exponential(s, (1 + lambda) * static_cast<double>(n));
    std::uint64_t k = s.uniform_index(n);
    for (const auto& [x, c] : config.occupancy) {
        if (k < c) {
            e.parent = x;
            break;
        }
        k -= c;
    }
    e.death = !s.bernoulli(lambda / (1 + lambda));
    if (e.death) {
        config.remove(e.parent);
    } else {
        e.child = neighbour(e.parent, config.dim, s);
        config.add(e.child);
    }
    config.canonical = false;
    return e;
}

EventLog EventLog::with_founders(int dim, const std::vector<Site>& sites) {
    check_dim(dim);
    EventLog log;
    log.dim = dim;
    log.site = sites;
    log.parent.assign(sites.size(), -1);
    log.founder.resize(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) log.founder[i] = static_cast<std::uint32_t>(i);
    return log;
}

std::size_t EventLog::founders() const {
    std::size_t k = 0;
    while (k < parent.size() && parent[k] < 0) ++k;
    return k;
}

std::uint64_t EventLog::add_birth(double time, std::uint64_t actor, const Site& child_site) {
    if (actor >= site.size()) throw ParameterError("event log: unknown actor");
    if (!records.empty() && time < records.back().time) throw ParameterError("event log: records out of order");
    const std::uint64_t child = site.size();
    site.push_back(child_site);
    parent.push_back(static_cast<std::int64_t>(actor));
    founder.push_back(founder[actor]);
    records.push_back({time, actor, false, child});
    horizon = std::max(horizon, time);
    return child;
}

void EventLog::add_death(double time, std::uint64_t actor) {
    if (actor >= site.size()) throw ParameterError("event log: unknown actor");
    if (!records.empty() && time < records.back().time) throw ParameterError("event log: records out of order");
    records.push_back({time, actor, true, 0});
    horizon = std::max(horizon, time);
}

std::vector<char> EventLog::alive_at(double t) const {
    std::vector<char> alive(site.size(), 0);
    for (std::size_t i = 0; i < founders(); ++i) alive[i] = 1;
    for (const auto& r : records) {
        if (r.time > t) break;
        if (r.death) {
            if (!alive[r.actor]) throw InvariantViolation("event log: dead particle acts", std::to_string(r.actor));
            alive[r.actor] = 0;
        } else {
            alive[r.child] = 1;
        }
    }
    return alive;
}

BrwConfig replay(const EventLog& log, double t) {
    const auto alive = log.alive_at(t);
    BrwConfig c;
    c.dim = log.dim;
    for (std::size_t i = 0; i < alive.size(); ++i)
        if (alive[i]) c.add(log.site[i]);
    return c;
}

BrwConfig replay(const EventLog& log) {
    return replay(log, log.records.empty() ? 0.0 : log.records.back().time);
}

BrwRun simulate_brw(int dim, const std::vector<Site>& founders, double lambda, double t, kernel::Stream& s,
                    const BrwRunOptions& opts) {
    check_dim(dim);
    if (!(lambda >= 0)) throw ParameterError("simulate_brw: lambda must be >= 0");
    if (opts.tilt != Tilt::None && !(lambda > 0 && lambda < 1))
        throw ParameterError("simulate_brw: spine tilt needs 0 < lambda < 1");
    BrwRun run;
    run.log = EventLog::with_founders(dim, founders);
    run.log.horizon = t;
    EventLog& log = run.log;

    std::vector<std::uint64_t> alive;
    std::vector<std::size_t> pos(founders.size());
    std::vector<char> spine(founders.size(), 0);
    for (std::size_t i = 0; i < founders.size(); ++i) {
        pos[i] = i;
        alive.push_back(i);
    }
    if (opts.tilt == Tilt::Spine && !founders.empty()) spine[0] = 1;
    if (opts.tilt == Tilt::SpinePerFounder) std::fill(spine.begin(), spine.end(), 1);

    const double plain_rate = 1 + lambda;
    const double spine_rate = opts.tilt == Tilt::None ? 0 : 2 * lambda;
    const double bound = std::max(plain_rate, spine_rate);
    double now = 0;
    while (!alive.empty()) {
        now += kernel::sample_exponential(s, bound * static_cast<double>(alive.size()));
        if (now > t) break;
        const std::uint64_t i = alive[s.uniform_index(alive.size())];
        bool birth;
        if (spine[i]) {
            if (!s.bernoulli(spine_rate / bound)) continue;
            birth = true;
        } else {
            if (bound > plain_rate && !s.bernoulli(plain_rate / bound)) continue;
            birth = s.bernoulli(lambda / (1 + lambda));
        }
        if (birth) {
            const Site y = neighbour(log.site[i], dim, s);
            std::uint64_t c;
            if (opts.record) {
                c = log.add_birth(now, i, y);
            } else {
                c = log.site.size();
                log.site.push_back(y);
                log.parent.push_back(static_cast<std::int64_t>(i));
                log.founder.push_back(log.founder[i]);
            }
            pos.push_back(alive.size());
            alive.push_back(c);
            spine.push_back(0);
            if (spine[i] && s.bernoulli(0.5)) {
                spine[i] = 0;
                spine[c] = 1;
            }
        } else {
            if (opts.record) log.add_death(now, i);
            const std::uint64_t last = alive.back();
            alive[pos[i]] = last;
            pos[last] = pos[i];
            alive.pop_back();
        }
    }
    run.final.dim = dim;
    run.alive_per_founder.assign(founders.size(), 0);
    for (std::uint64_t i : alive) {
        run.final.add(log.site[i]);
        ++run.alive_per_founder[log.founder[i]];
    }
    log.horizon = t;
    return run;
}

std::vector<WalkerJump> walker_path(const EventLog& log, std::uint64_t founder, double t) {
    if (founder >= log.founders()) throw ParameterError("walker_path: not a founder");
    const auto alive = log.alive_at(t);
    // Children carry larger ids than parents, so one reverse pass suffices.
    std::vector<char> desc(alive.begin(), alive.end());
    std::vector<char> born(log.site.size(), 0);
    for (std::size_t i = 0; i < log.founders(); ++i) born[i] = 1;
    for (const auto& r : log.records) {
        if (r.time > t) break;
        if (!r.death) born[r.child] = 1;
    }
    for (std::size_t i = log.site.size(); i-- > 0;) {
        if (born[i] && desc[i] && log.parent[i] >= 0) desc[static_cast<std::size_t>(log.parent[i])] = 1;
    }
    if (!desc[founder]) throw NoWalker("walker_path: founder " + std::to_string(founder) + " has no alive descendant at t");
    std::vector<WalkerJump> jumps;
    std::uint64_t cur = founder;
    for (const auto& r : log.records) {
        if (r.time > t) break;
        if (r.death || r.actor != cur || !desc[r.child]) continue;
        WalkerJump j;
        j.time = r.time;
        for (int k = 0; k < kMaxDim; ++k) j.direction[k] = log.site[r.child][k] - log.site[cur][k];
        jumps.push_back(j);
        cur = r.child;
    }
    return jumps;
}

} // namespace pdl::branching
