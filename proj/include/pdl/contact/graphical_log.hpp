#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "pdl/kernel/stream.hpp"

namespace pdl::contact {

struct LogEvent {
    enum class Kind { Recovery, Left, Right };
    double time = 0;
    Kind kind = Kind::Recovery;
    // Uniform on [0, lambda_max) for edge events, 0 for recoveries.
    double mark = 0;

    // The edge carried by this event is lambda-open iff mark < lambda.
    bool open(double lambda) const { return kind != Kind::Recovery && mark < lambda; }
};

// Graphical construction over Z x [t0, t1]. Every site carries a rate-1
// recovery process and the two directed edges out of it carry Poisson
// events of rate lambda_max with uniform marks. Events are produced lazily
// per (site, unit time slab) from counter-based streams, so any process
// reading the same log sees the same events regardless of access order.
class GraphicalLog {
public:
    GraphicalLog(const kernel::StreamKey& key, double lambda_max, double t0, double t1);

    // Fixed events only; nothing else happens. Used for hand-built tests.
    static GraphicalLog scripted(std::map<long, std::vector<LogEvent>> events, double lambda_max,
                                 double t0, double t1);

    // Events at `site` with time in [slab, slab + 1) and inside [t0, t1],
    // sorted by time.
    std::vector<LogEvent> slab(long site, std::int64_t slab) const;
    // Same, writing into `out` (cleared first).
    void slab(long site, std::int64_t slab, std::vector<LogEvent>& out) const;

    double lambda_max() const { return lambda_max_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    bool is_scripted() const { return scripted_; }

private:
    GraphicalLog() = default;

    kernel::StreamKey key_;
    double lambda_max_ = 0, t0_ = 0, t1_ = 0;
    bool scripted_ = false;
    std::map<long, std::vector<LogEvent>> script_;
};

} // namespace pdl::contact
