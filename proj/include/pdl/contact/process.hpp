#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdl/contact/config.hpp"
#include "pdl/contact/graphical_log.hpp"

namespace pdl::contact {

enum class BorderMode { BothEdges, RightEdgeOnly };

struct ContactParams {
    double lambda_i = 1;
    double lambda_e = 1;
    BorderMode border = BorderMode::BothEdges;

    // Throws ParameterError on negative rates or rates above lambda_max.
    void validate(double lambda_max) const;
};

// Result of applying one log event.
struct Change {
    long site = 0;
    bool added = false;
};

// One realisation of the modified-border contact process driven by a
// graphical log. Only sites that are infected (plus the fill source lo - 1
// under AllInfected) keep a cursor into the log, so the cost per unit time
// is proportional to the number of infected sites.
class Process {
public:
    Process(InfectionConfig init, const GraphicalLog& log, ContactParams params);
    Process(InfectionConfig init, const GraphicalLog& log, ContactParams params, double t0);

    // Time of the next event that would be examined, or +inf.
    double next_time();
    // Applies the next event; returns the resulting change, if any.
    std::optional<Change> step();
    // Applies every event with time <= t and sets the clock to t.
    void advance_to(double t);

    void raise_window(long new_lo);
    // Moves lo to right() - width + 1 when that is higher.
    void track_window();

    double time() const { return now_; }
    const InfectionConfig& config() const { return cfg_; }
    const ContactParams& params() const { return params_; }
    // Time at which the configuration became empty, if it did.
    std::optional<double> extinction_time() const { return extinct_at_; }
    std::uint64_t events_applied() const { return events_; }
    // Infections of lo coming from the AllInfected fill source.
    std::uint64_t fill_infections() const { return fill_infections_; }

private:
    struct Cursor {
        std::int64_t slab = 0;
        std::vector<LogEvent> events;
        std::size_t idx = 0;
        std::uint32_t gen = 0;
    };
    struct Entry {
        double time;
        long site;
        std::uint32_t gen;
        bool operator>(const Entry& o) const {
            if (time != o.time) return time > o.time;
            return site > o.site;
        }
    };

    void open_cursor(long x);
    void close_cursor(long x);
    // Positions the cursor after now_ and queues it; false if the log is done.
    bool seek(long x, Cursor& c);
    void drop_stale();
    bool is_source(long x) const;

    InfectionConfig cfg_;
    const GraphicalLog* log_;
    ContactParams params_;
    double now_;
    std::unordered_map<long, Cursor> cursors_;
    std::vector<std::vector<LogEvent>> spare_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
    std::uint32_t next_gen_ = 1;
    std::optional<double> extinct_at_;
    std::uint64_t events_ = 0;
    std::uint64_t fill_infections_ = 0;
};

// Runs from config at t0 to t1. Windowed configurations track the right
// edge at every integer time.
InfectionConfig evolve(const InfectionConfig& config, const GraphicalLog& log, const ContactParams& params,
                       double t0, double t1);

struct CoupleResult {
    InfectionConfig a, b;
    bool contained = true;
    // Time of the first violation, when there was one.
    std::optional<double> violated_at;
};

// Evolves A and B on the same log to time t and checks A_s within B_s after
// every event time s. Windowed inputs share one window boundary.
CoupleResult couple(const InfectionConfig& A, const InfectionConfig& B, const GraphicalLog& log,
                    const ContactParams& params, double t);

struct DominationResult {
    long right_classical = 0;
    long right_modified = 0;
    bool dominated = true;
    std::optional<double> violated_at;
    // Diagnostics from re-running both processes under AllHealthy fill.
    std::vector<std::string> warnings;
};

// Classical process at lambda_c against the (lambda_c, lambda_c + eps)
// process, both from the half-line surrogate of the given width, on one log.
// Checks R(classical) <= R(modified) after every event time.
DominationResult dominate_edges(const GraphicalLog& log, double lambda_c, double eps, double t, long width);

} // namespace pdl::contact
