#include "pdl/contact/graphical_log.hpp"

#include <algorithm>
#include <cmath>

#include "pdl/kernel/errors.hpp"

namespace pdl::contact {

GraphicalLog::GraphicalLog(const kernel::StreamKey& key, double lambda_max, double t0, double t1)
    : key_(key), lambda_max_(lambda_max), t0_(t0), t1_(t1) {
    if (!(lambda_max >= 0) || !std::isfinite(lambda_max)) throw ParameterError("graphical log: lambda_max must be finite and >= 0");
    if (!(t1 >= t0)) throw ParameterError("graphical log: need t0 <= t1");
}

GraphicalLog GraphicalLog::scripted(std::map<long, std::vector<LogEvent>> events, double lambda_max, double t0,
                                    double t1) {
    GraphicalLog g;
    g.lambda_max_ = lambda_max;
    g.t0_ = t0;
    g.t1_ = t1;
    g.scripted_ = true;
    for (auto& [site, ev] : events) {
        for (const auto& e : ev)
            if (e.kind != LogEvent::Kind::Recovery && !(e.mark >= 0 && e.mark < lambda_max))
                throw ParameterError("scripted log: edge mark outside [0, lambda_max)");
        std::sort(ev.begin(), ev.end(), [](const LogEvent& a, const LogEvent& b) { return a.time < b.time; });
    }
    g.script_ = std::move(events);
    return g;
}

std::vector<LogEvent> GraphicalLog::slab(long site, std::int64_t k) const {
    std::vector<LogEvent> out;
    slab(site, k, out);
    return out;
}

void GraphicalLog::slab(long site, std::int64_t k, std::vector<LogEvent>& out) const {
    out.clear();
    const double a = static_cast<double>(k), b = a + 1;
    if (b <= t0_ || a > t1_) return;
    if (scripted_) {
        auto it = script_.find(site);
        if (it == script_.end()) return;
        for (const auto& e : it->second)
            if (e.time >= a && e.time < b && e.time >= t0_ && e.time <= t1_) out.push_back(e);
        return;
    }
    kernel::Stream s(key_.child(static_cast<std::uint64_t>(site)).child(static_cast<std::uint64_t>(k)));
    const double rate = 1 + 2 * lambda_max_;
    double t = a;
    for (;;) {
        t += kernel::sample_exponential(s, rate);
        if (t >= b) break;
        const double v = s.uniform() * rate;
        LogEvent e;
        e.time = t;
        if (v < 1) {
            e.kind = LogEvent::Kind::Recovery;
        } else if (v < 1 + lambda_max_) {
            e.kind = LogEvent::Kind::Left;
            e.mark = v - 1;
        } else {
            e.kind = LogEvent::Kind::Right;
            e.mark = std::min(v - 1 - lambda_max_, std::nextafter(lambda_max_, 0.0));
        }
        if (t >= t0_ && t <= t1_) out.push_back(e);
    }
}

} // namespace pdl::contact
