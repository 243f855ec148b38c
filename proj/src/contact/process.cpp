#include "pdl/contact/process.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::contact {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ContactParams::validate(double lambda_max) const {
    if (!(lambda_i >= 0) || !(lambda_e >= 0)) throw ParameterError("contact: infection rates must be >= 0");
    // Marks are strictly below lambda_max, so a rounding excess is harmless.
    const double cap = lambda_max * (1 + 1e-12);
    if (lambda_i > cap || lambda_e > cap) {
        std::ostringstream os;
        os << "contact: rates (" << lambda_i << ", " << lambda_e << ") exceed the log's lambda_max " << lambda_max;
        throw ParameterError(os.str());
    }
}

Process::Process(InfectionConfig init, const GraphicalLog& log, ContactParams params)
    : Process(std::move(init), log, params, log.t0()) {}

Process::Process(InfectionConfig init, const GraphicalLog& log, ContactParams params, double t0)
    : cfg_(std::move(init)), log_(&log), params_(params), now_(t0) {
    params_.validate(log.lambda_max());
    if (t0 < log.t0() || t0 > log.t1()) throw ParameterError("contact: start time outside the log's time range");
    for (long x : cfg_.sites()) open_cursor(x);
    if (cfg_.fill() == Fill::AllInfected) open_cursor(cfg_.window_lo() - 1);
    if (cfg_.empty()) extinct_at_ = now_;
}

bool Process::is_source(long x) const {
    return cfg_.fill() == Fill::AllInfected && x == cfg_.window_lo() - 1;
}

void Process::open_cursor(long x) {
    Cursor c;
    if (!spare_.empty()) {
        c.events = std::move(spare_.back());
        spare_.pop_back();
    }
    c.slab = static_cast<std::int64_t>(std::floor(now_));
    log_->slab(x, c.slab, c.events);
    c.gen = next_gen_++;
    auto& stored = cursors_[x] = std::move(c);
    seek(x, stored);
}

void Process::close_cursor(long x) {
    auto it = cursors_.find(x);
    if (it == cursors_.end()) return;
    if (spare_.size() < 64) spare_.push_back(std::move(it->second.events));
    cursors_.erase(it);
}

bool Process::seek(long x, Cursor& c) {
    for (;;) {
        while (c.idx < c.events.size() && c.events[c.idx].time <= now_) ++c.idx;
        if (c.idx < c.events.size()) {
            heap_.push({c.events[c.idx].time, x, c.gen});
            return true;
        }
        ++c.slab;
        if (static_cast<double>(c.slab) > log_->t1()) return false;
        log_->slab(x, c.slab, c.events);
        c.idx = 0;
    }
}

void Process::drop_stale() {
    while (!heap_.empty()) {
        const Entry& e = heap_.top();
        auto it = cursors_.find(e.site);
        if (it != cursors_.end() && it->second.gen == e.gen) return;
        heap_.pop();
    }
}

double Process::next_time() {
    drop_stale();
    return heap_.empty() ? kInf : heap_.top().time;
}

std::optional<Change> Process::step() {
    drop_stale();
    if (heap_.empty()) return std::nullopt;
    const Entry e = heap_.top();
    heap_.pop();
    const long x = e.site;
    const LogEvent ev = [&] {
        const Cursor& c = cursors_.at(x);
        return c.events[c.idx];
    }();
    now_ = ev.time;
    ++events_;
    std::optional<Change> change;
    const bool src = is_source(x);
    switch (ev.kind) {
    case LogEvent::Kind::Recovery:
        if (!src) {
            cfg_.erase(x);
            close_cursor(x);
            if (cfg_.empty()) extinct_at_ = now_;
            return Change{x, false};
        }
        break;
    case LogEvent::Kind::Left:
        if (!src) {
            const bool edge = params_.border == BorderMode::BothEdges && cfg_.left() == x;
            if (ev.open(edge ? params_.lambda_e : params_.lambda_i) && cfg_.insert(x - 1)) {
                open_cursor(x - 1);
                change = Change{x - 1, true};
            }
        }
        break;
    case LogEvent::Kind::Right: {
        const bool edge = cfg_.right() == x;
        if (ev.open(edge ? params_.lambda_e : params_.lambda_i) && cfg_.insert(x + 1)) {
            if (src) ++fill_infections_;
            open_cursor(x + 1);
            change = Change{x + 1, true};
        }
        break;
    }
    }
    auto it = cursors_.find(x);
    if (it != cursors_.end() && it->second.gen == e.gen) seek(x, it->second);
    return change;
}

void Process::advance_to(double t) {
    if (t > log_->t1()) throw ParameterError("contact: log does not cover the requested time");
    while (next_time() <= t) step();
    if (t > now_) now_ = t;
}

void Process::raise_window(long new_lo) {
    if (!cfg_.windowed()) throw ParameterError("raise_window on a configuration without a window");
    const long old = cfg_.window_lo();
    if (new_lo <= old) return;
    if (cfg_.fill() == Fill::AllInfected) {
        for (long x = old - 1; x <= new_lo - 2; ++x) close_cursor(x);
        cfg_.raise_window(new_lo);
        if (!cursors_.count(new_lo - 1)) open_cursor(new_lo - 1);
    } else {
        for (long x = old; x < new_lo; ++x) close_cursor(x);
        cfg_.raise_window(new_lo);
        if (cfg_.empty() && !extinct_at_) extinct_at_ = now_;
    }
}

void Process::track_window() {
    if (!cfg_.windowed() || cfg_.empty()) return;
    raise_window(cfg_.right() - cfg_.width() + 1);
}

namespace {

// Drives several processes on one log in global time order. After all
// events sharing a time stamp are applied, check(time, changes) runs; a
// false return records a violation. At every integer time the window
// boundaries of all windowed processes move to a common value and
// check(time, {}) runs again.
template <class Check>
std::optional<double> lockstep(std::vector<Process*> ps, double t_end, Check check) {
    std::optional<double> violated;
    const double start = ps.front()->time();
    double next_mark = std::floor(start) + 1;
    std::vector<Change> changes;
    for (;;) {
        double s = kInf;
        for (auto* p : ps) s = std::min(s, p->next_time());
        if (next_mark < t_end && next_mark < s) {
            long lo = std::numeric_limits<long>::max();
            bool any = false;
            for (auto* p : ps) {
                p->advance_to(next_mark);
                const auto& c = p->config();
                if (!c.windowed() || c.empty()) continue;
                lo = std::min(lo, c.right() - c.width() + 1);
                any = true;
            }
            if (any)
                for (auto* p : ps)
                    if (p->config().windowed()) p->raise_window(lo);
            changes.clear();
            if (!check(next_mark, changes) && !violated) violated = next_mark;
            next_mark += 1;
            continue;
        }
        if (s > t_end) break;
        changes.clear();
        for (auto* p : ps)
            while (p->next_time() == s)
                if (auto c = p->step()) changes.push_back(*c);
        if (!check(s, changes) && !violated) violated = s;
    }
    for (auto* p : ps) p->advance_to(t_end);
    return violated;
}

} // namespace

InfectionConfig evolve(const InfectionConfig& config, const GraphicalLog& log, const ContactParams& params,
                       double t0, double t1) {
    if (t0 < log.t0() || t1 > log.t1() || t1 < t0)
        throw ParameterError("evolve: log does not cover [t0, t1]");
    Process p(config, log, params, t0);
    if (config.windowed()) {
        for (double s = std::floor(t0) + 1; s < t1; s += 1) {
            p.advance_to(s);
            p.track_window();
        }
    }
    p.advance_to(t1);
    return p.config();
}

CoupleResult couple(const InfectionConfig& A, const InfectionConfig& B, const GraphicalLog& log,
                    const ContactParams& params, double t) {
    if (!A.subset_of(B)) throw ParameterError("couple: A is not contained in B");
    if (t > log.t1()) throw ParameterError("couple: log does not cover the requested time");
    Process pa(A, log, params), pb(B, log, params);
    CoupleResult r;
    r.violated_at = lockstep({&pa, &pb}, t, [&](double, const std::vector<Change>& ch) {
        if (ch.empty()) return pa.config().subset_of(pb.config());
        for (const auto& c : ch)
            if (pa.config().contains(c.site) && !pb.config().contains(c.site)) return false;
        return true;
    });
    r.a = pa.config();
    r.b = pb.config();
    r.contained = !r.violated_at && r.a.subset_of(r.b);
    return r;
}

DominationResult dominate_edges(const GraphicalLog& log, double lambda_c, double eps, double t, long width) {
    if (eps < 0) throw ParameterError("dominate_edges: eps must be >= 0");
    const ContactParams classical{lambda_c, lambda_c, BorderMode::BothEdges};
    const ContactParams modified{lambda_c, lambda_c + eps, BorderMode::BothEdges};
    const auto full = InfectionConfig::half_line(0, width, Fill::AllInfected);
    const auto trunc = InfectionConfig::half_line(0, width, Fill::AllHealthy);
    Process z(full, log, classical), x(full, log, modified);
    Process zh(trunc, log, classical), xh(trunc, log, modified);

    DominationResult r;
    bool warned_z = false, warned_x = false;
    auto bracket = [&](double s) {
        auto differs = [](Process& a, Process& h) {
            return h.config().empty() || h.config().right() != a.config().right();
        };
        std::ostringstream os;
        if (!warned_z && differs(z, zh)) {
            warned_z = true;
            os << "truncation bracket: classical right edge depends on the fill rule at t=" << s
               << "; window width " << width << " is too small";
            r.warnings.push_back(os.str());
        }
        if (!warned_x && differs(x, xh)) {
            warned_x = true;
            std::ostringstream o2;
            o2 << "truncation bracket: modified right edge depends on the fill rule at t=" << s
               << "; window width " << width << " is too small";
            r.warnings.push_back(o2.str());
        }
    };
    r.violated_at = lockstep({&z, &x, &zh, &xh}, t, [&](double s, const std::vector<Change>& ch) {
        if (ch.empty()) bracket(s);
        return z.config().right() <= x.config().right();
    });
    bracket(t);
    r.right_classical = z.config().right();
    r.right_modified = x.config().right();
    r.dominated = !r.violated_at && r.right_classical <= r.right_modified;
    return r;
}

} // namespace pdl::contact
