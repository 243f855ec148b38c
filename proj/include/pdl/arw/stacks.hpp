#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pdl/kernel/stream.hpp"

namespace pdl::arw {

enum class Instruction : std::uint8_t { JumpLeft, JumpRight, Sleep };

std::string to_string(Instruction ins);

// Per-site i.i.d. instruction sequences with a consumed-prefix pointer
// (the odometer h(x)).
//
// Instruction k at site x is a pure function of (seed, label of x, k): it is
// read from Philox block k/4 of the site's stream, so replay never depends on
// the order in which sites are consumed. An optional script overrides the
// first instructions at each site; past the script the sampled sequence
// continues at the same index.
class InstructionStack {
public:
    InstructionStack() = default;
    // Site x reads stream `base.child("site").child(x).child("stack")`.
    InstructionStack(std::size_t n, double lambda, const kernel::StreamKey& base);
    static InstructionStack scripted(std::vector<std::vector<Instruction>> script, double lambda = 1.0,
                                     const kernel::StreamKey& base = kernel::StreamKey(0, "scripted"));

    std::size_t size() const { return odometer_.size(); }
    double lambda() const { return lambda_; }

    Instruction at(std::size_t x, std::uint64_t k) const;
    Instruction peek(std::size_t x) const { return at(x, odometer_[x]); }
    Instruction consume(std::size_t x);

    std::uint64_t odometer(std::size_t x) const { return odometer_[x]; }
    const std::vector<std::uint64_t>& odometers() const { return odometer_; }
    std::uint64_t jumps_consumed() const { return jumps_; }
    std::uint64_t total_consumed() const { return total_; }
    // Rewinds every pointer to 0; the instructions themselves never change.
    void rewind();

private:
    Instruction decode(std::uint32_t u) const;

    double lambda_ = 1.0;
    std::uint64_t sleep_threshold_ = 0;
    std::uint64_t left_threshold_ = 0;
    std::vector<kernel::StreamKey> keys_;
    std::vector<std::uint64_t> odometer_;
    std::vector<std::vector<Instruction>> script_;
    mutable std::vector<std::uint64_t> cached_index_;
    mutable std::vector<std::array<std::uint32_t, 4>> cached_block_;
    std::uint64_t jumps_ = 0;
    std::uint64_t total_ = 0;
};

} // namespace pdl::arw
