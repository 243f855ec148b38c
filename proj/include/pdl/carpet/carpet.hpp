#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "pdl/arw/ring.hpp"
#include "pdl/arw/stacks.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::carpet {

enum class Mode { A, B };
enum class Direction { Left, Right };
enum class VacancyPlacement { Uniform, Even };

std::string to_string(Mode m);
std::string to_string(Direction d);

struct FreeParticle {
    std::size_t site = 0;
    bool frozen = false;
    // Arrival order; lower stamps are chosen first among equals.
    std::uint64_t stamp = 0;
};

struct HotChoice {
    std::size_t block = 0;  // logical block index in 1..n
    std::size_t site = 0;   // physical site
    std::size_t particle = 0;
};

struct EmissionOutcome {
    enum class Kind { Emitted, Failure, ProcedureFinished, Capped };
    Kind kind = Kind::ProcedureFinished;
    Direction direction = Direction::Right;
    std::size_t emitter = 0;   // logical
    std::size_t receiver = 0;  // logical
    bool fixed_defect = false;
};

std::string to_string(const EmissionOutcome& o);

// Ring of N = (n+2)K sites with K = a^2, split into n+2 blocks. Block b has
// base site bK and covers offsets [lo, lo + K) from it, with lo = -K/2. For
// a = 2 the hole range [bK, bK + a] would reach the next block, so there
// lo = -K/2 + 1. Logical block i (as used by the procedure) is physical block
// (i + offset) mod (n+2); the offset rotates at the end of every mode.
class CarpetState {
public:
    // Builds the initial labelling. The ring must have at most one particle
    // per site and N must equal (n+2)a^2 with n even.
    CarpetState(arw::RingConfig ring, int a);

    int a() const { return a_; }
    int K() const { return K_; }
    int n() const { return n_; }
    std::size_t blocks() const { return static_cast<std::size_t>(n_) + 2; }
    std::size_t N() const { return ring_.size(); }
    Mode mode() const { return mode_; }
    std::size_t offset() const { return offset_; }

    const arw::RingConfig& ring() const { return ring_; }
    arw::RingConfig& ring() { return ring_; }

    std::size_t physical_block(std::size_t logical) const { return (logical + offset_) % blocks(); }
    std::size_t logical_block(std::size_t physical) const { return (physical + blocks() - offset_) % blocks(); }
    std::size_t block_of_site(std::size_t s) const;
    // First offset of a block's territory relative to its base site.
    long territory_lo() const { return lo_; }
    std::size_t base_site(std::size_t physical_block) const { return physical_block * static_cast<std::size_t>(K_); }
    // Physical site at signed offset r from the base of a physical block.
    std::size_t site_at(std::size_t physical_block, long r) const;

    // Per-site labels.
    bool carpet(std::size_t s) const { return carpet_[s] != 0; }
    bool hole(std::size_t s) const { return hole_[s] != 0; }
    bool defect(std::size_t s) const { return defect_[s] != 0; }
    const std::vector<FreeParticle>& free_particles() const { return free_; }
    std::optional<std::size_t> hot() const { return hot_; }

    std::size_t free_count() const { return free_.size(); }
    std::size_t frozen_count() const;
    std::size_t defect_count() const;
    std::size_t defects_in_block(std::size_t physical_block) const;
    // Offset v in [0, a] of the hole of a physical block, or -1 if none is found there.
    int hole_offset(std::size_t physical_block) const;
    std::size_t frozen_in_block(std::size_t physical_block) const;

    // Direct label edits, for building broken states in tests.
    void set_hole(std::size_t s, bool v) { hole_[s] = v; }
    void set_carpet(std::size_t s, bool v) { carpet_[s] = v; }
    void set_defect(std::size_t s, bool v) { defect_[s] = v; }
    void set_frozen(std::size_t particle, bool v) { free_.at(particle).frozen = v; }

    const std::deque<std::string>& events() const { return events_; }
    void log_event(std::string e);

    // Structured text snapshot for invariant-violation reports.
    std::string dump(const std::vector<std::string>& violations = {}) const;

private:
    friend class Procedure;

    std::size_t add_free(std::size_t site, bool frozen);
    void remove_free(std::size_t particle);

    arw::RingConfig ring_;
    int a_ = 2, K_ = 4, n_ = 2;
    long lo_ = -2;
    Mode mode_ = Mode::A;
    std::size_t offset_ = 0;
    std::vector<std::uint8_t> carpet_, hole_, defect_;
    std::vector<FreeParticle> free_;
    std::optional<std::size_t> hot_;
    std::uint64_t next_stamp_ = 0;
    std::deque<std::string> events_;
};

// P1..P9 violated by the state, evaluated literally.
std::vector<std::string> check_properties(const CarpetState& state);
// The particle counts implied by the labels must match the ring.
std::vector<std::string> check_consistency(const CarpetState& state);

std::optional<HotChoice> choose_hot(const CarpetState& state);

struct ModeStats {
    Mode mode = Mode::A;
    // Indexed by logical block 0..n+1 of the mode.
    std::vector<std::uint64_t> L, R;
    // Arrivals at block i from block i+1 that stay free / fix a defect.
    std::vector<std::uint64_t> M, D;
    // Arrivals at block i from block i-1.
    std::vector<std::uint64_t> M_from_left, D_from_left;
    std::vector<std::uint64_t> S;
    std::vector<std::size_t> emitting_blocks;
    std::uint64_t frozen_in_emitting = 0;  // F(E_n)
    std::uint64_t frozen_total = 0;        // F(Z_N)
    std::uint64_t defects_end = 0;
    std::uint64_t free_end = 0;
    std::int64_t conserved_start = 0;  // free - defects
    std::int64_t conserved_end = 0;
    std::uint64_t attempts = 0, emissions = 0, failures = 0;
    std::uint64_t jumps = 0, topplings = 0;
    bool balance_condition = false;
    bool capped = false;

    // Leftward and rightward flow audit over every interior boundary.
    bool mass_balance_ok() const;
};

struct ProcedureOptions {
    bool check_invariants = false;
    // When non-empty, invariant violations also write a dump file here.
    std::string dump_dir;
    std::uint64_t emission_cap = 1'000'000'000ULL;
    std::uint64_t step_cap = 1'000'000'000ULL;
};

// Drives attempted emissions and modes over one CarpetState and one set of
// instruction stacks. Only the hot particle's site is ever toppled.
class Procedure {
public:
    Procedure(CarpetState& state, arw::InstructionStack& stacks, ProcedureOptions opts = {});

    EmissionOutcome attempted_emission();
    ModeStats run_mode();

    std::uint64_t topplings() const { return topplings_; }
    bool step_cap_hit() const { return topplings_ >= opts_.step_cap; }
    // Number of attempted emissions whose outcome passed the checker.
    std::uint64_t checks_run() const { return checks_; }

private:
    void verify(const char* where);
    void finish_emission(std::size_t particle, std::size_t site, std::size_t emitter_phys, std::size_t receiver_phys,
                         Direction dir, EmissionOutcome& out);

    CarpetState& st_;
    arw::InstructionStack& stacks_;
    ProcedureOptions opts_;
    std::uint64_t topplings_ = 0;
    std::uint64_t checks_ = 0;
    ModeStats* stats_ = nullptr;
};

// floor(zeta N) active particles, at most one per site. Vacancies avoid the
// sites bK when there are enough other sites.
arw::RingConfig initial_config(std::size_t N, double zeta, int a, VacancyPlacement placement,
                               const kernel::StreamKey& key);

struct CarpetRunResult {
    std::vector<ModeStats> modes;
    // Cumulative jump count at the end of each mode, pre-flattening included.
    std::vector<std::uint64_t> jump_trace;
    std::uint64_t flatten_jumps = 0;
    std::uint64_t carpet_jumps = 0;
    std::uint64_t fallback_jumps = 0;
    std::uint64_t total_jumps = 0;
    std::size_t modes_completed = 0;
    bool carpet_started = false;
    bool stabilized = false;
    bool capped = false;
    arw::RingConfig final_config;
};

// Pre-flattens, runs alternating modes until two consecutive modes make no
// attempted emission (or mode_cap), then finishes with leftmost plain
// stabilization on the same stacks.
CarpetRunResult run_until_stable(const arw::RingConfig& config, int a, arw::InstructionStack& stacks,
                                 std::size_t mode_cap, std::uint64_t step_cap, ProcedureOptions opts = {});

} // namespace pdl::carpet
