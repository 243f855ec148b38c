#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdl/branching/genealogy.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::branching {

constexpr int kMaxDim = 3;
// Unused trailing coordinates stay 0.
using Site = std::array<long, kMaxDim>;

struct BrwConfig {
    int dim = 1;
    std::map<Site, std::uint64_t> occupancy;
    bool canonical = false;

    std::uint64_t particles() const;
    bool empty() const { return occupancy.empty(); }
    void add(const Site& x, std::uint64_t n = 1);
    // Removes one particle; throws if x is empty.
    void remove(const Site& x);
    // "d|x[,y[,z]]:count;..." in site order.
    std::string encode() const;
    // Largest lattice (L1) distance between occupied sites.
    long support_diameter() const;
    bool operator==(const BrwConfig& o) const { return dim == o.dim && occupancy == o.occupancy; }
};

// Shifts the lexicographically smallest occupied site to the origin. The
// empty configuration is returned unchanged.
BrwConfig canonical_brw(const BrwConfig& config);

struct BrwEvent {
    double dt = 0;
    bool death = false;
    Site parent{};
    Site child{};
};

// One event of the configuration-level walk: rate (1 + lambda) per
// particle, death with probability 1/(1 + lambda), otherwise a birth on a
// uniform nearest neighbour. Throws AbsorbedError on the empty config.
BrwEvent step_brw(BrwConfig& config, double lambda, kernel::Stream& s);

// Individual-level history. Particle ids are allocated in birth order, so a
// child always has a larger id than its parent.
struct EventLog {
    struct Record {
        double time = 0;
        std::uint64_t actor = 0;
        bool death = false;
        // Birth records: the new particle's id.
        std::uint64_t child = 0;
    };

    int dim = 1;
    double horizon = 0;
    std::vector<Site> site;
    std::vector<std::int64_t> parent;
    std::vector<std::uint32_t> founder;
    std::vector<Record> records;

    static EventLog with_founders(int dim, const std::vector<Site>& sites);
    std::size_t founders() const;
    // Appends a birth by `actor` at `time` and returns the child id.
    std::uint64_t add_birth(double time, std::uint64_t actor, const Site& child_site);
    void add_death(double time, std::uint64_t actor);
    // Alive flags of every particle at time t (records with time <= t).
    std::vector<char> alive_at(double t) const;
};

// Final configuration reconstructed from the founders and the records.
BrwConfig replay(const EventLog& log);
BrwConfig replay(const EventLog& log, double t);

struct BrwRunOptions {
    Tilt tilt = Tilt::None;
    bool record = true;
};

struct BrwRun {
    EventLog log;
    BrwConfig final;
    // Alive particles per founder at the horizon.
    std::vector<std::uint64_t> alive_per_founder;
};

// Simulates the individual-level walk from one particle per founder site up
// to time t. Under a spine tilt each distinguished particle gives birth at
// rate 2 lambda and never dies; after each of its births the mark moves to
// the child with probability 1/2.
BrwRun simulate_brw(int dim, const std::vector<Site>& founders, double lambda, double t, kernel::Stream& s,
                    const BrwRunOptions& opts = {});

struct WalkerJump {
    double time = 0;
    Site direction{};
};

// Offline walker of a founder: at each birth by the current walker whose
// child has alive descendants at time t, the walker moves to the child.
// Throws NoWalker if the founder has no alive descendant at t.
std::vector<WalkerJump> walker_path(const EventLog& log, std::uint64_t founder, double t);

} // namespace pdl::branching
