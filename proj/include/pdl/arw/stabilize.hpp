#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdl/arw/ring.hpp"
#include "pdl/arw/stacks.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::arw {

struct Odometer {
    std::vector<std::uint64_t> m;
    std::uint64_t jumps = 0;

    std::uint64_t total() const;
    bool operator==(const Odometer&) const = default;
};

struct ToppleResult {
    Instruction instruction;
    // Destination of a jump; equals the toppled site for Sleep.
    std::size_t target;
};

// Consumes the next instruction at x and applies it. Throws IllegalToppling
// if x is not Active.
ToppleResult topple(RingConfig& config, InstructionStack& stacks, std::size_t x);

class SchedulingPolicy {
public:
    enum class Kind { Leftmost, Rightmost, Cyclic, UniformRandom };

    static SchedulingPolicy leftmost();
    static SchedulingPolicy rightmost();
    // Sweeps cyclically from `start`, continuing after the last toppled site.
    static SchedulingPolicy cyclic(std::size_t start);
    static SchedulingPolicy uniform_random(const kernel::StreamKey& key);

    Kind kind() const { return kind_; }
    std::string name() const;
    // Picks an unstable site. The config must have one.
    std::size_t select(const RingConfig& config);
    void reset();

private:
    Kind kind_ = Kind::Leftmost;
    std::size_t start_ = 0;
    std::size_t cursor_ = 0;
    kernel::StreamKey key_;
    kernel::Stream stream_;
};

struct StabilizeResult {
    Odometer odometer;
    bool terminated = false;
    std::uint64_t steps = 0;
};

// Topples policy-chosen unstable sites of `config` in place until stable or
// `step_cap` topplings have been made. The odometer covers this call only.
StabilizeResult stabilize(RingConfig& config, InstructionStack& stacks,
                          SchedulingPolicy policy = SchedulingPolicy::leftmost(),
                          std::uint64_t step_cap = 1'000'000'000ULL);

struct FlattenResult {
    Odometer odometer;
    bool completed = false;
};

// Topples only sites holding two or more particles until none remain.
FlattenResult pre_flatten(RingConfig& config, InstructionStack& stacks, std::uint64_t step_cap);

enum class AbelianVerdict { Agree, Disagree, Inconclusive };

std::string to_string(AbelianVerdict v);

struct AbelianReport {
    AbelianVerdict verdict = AbelianVerdict::Inconclusive;
    std::vector<RingConfig> finals;
    std::vector<Odometer> odometers;
};

// Stabilizes a copy of (config, stacks) once per policy, each from odometer 0
// on the same frozen instructions.
AbelianReport abelian_check(const RingConfig& config, const InstructionStack& stacks,
                            std::vector<SchedulingPolicy> policies, std::uint64_t step_cap = 1'000'000ULL);

struct ExhaustiveResult {
    // Distinct terminal odometers reached over every legal toppling order.
    std::vector<std::vector<std::uint64_t>> terminal_odometers;
    std::size_t states_visited = 0;
    bool complete = false;
};

// Depth-first search over all legal toppling sequences. A state is the
// odometer vector, which determines the configuration given the stacks.
ExhaustiveResult explore_all_orders(const RingConfig& config, const InstructionStack& stacks,
                                    std::size_t max_states = 2'000'000);

} // namespace pdl::arw
