#include "pdl/arw/stacks.hpp"

#include <cmath>
#include <limits>

#include "pdl/kernel/errors.hpp"

namespace pdl::arw {

std::string to_string(Instruction ins) {
    switch (ins) {
    case Instruction::JumpLeft: return "JL";
    case Instruction::JumpRight: return "JR";
    case Instruction::Sleep: return "Sleep";
    }
    return "?";
}

InstructionStack::InstructionStack(std::size_t n, double lambda, const kernel::StreamKey& base)
    : lambda_(lambda) {
    if (n == 0) throw ParameterError("InstructionStack: ring size must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("InstructionStack: lambda must be >= 0");
    constexpr double two32 = 4294967296.0;
    sleep_threshold_ = static_cast<std::uint64_t>(std::floor(lambda / (1.0 + lambda) * two32));
    left_threshold_ = sleep_threshold_ + (static_cast<std::uint64_t>(two32) - sleep_threshold_) / 2;
    const auto site = base.child("site");
    keys_.reserve(n);
    for (std::size_t x = 0; x < n; ++x) keys_.push_back(site.child(x).child("stack"));
    odometer_.assign(n, 0);
    cached_index_.assign(n, std::numeric_limits<std::uint64_t>::max());
    cached_block_.assign(n, {});
}

InstructionStack InstructionStack::scripted(std::vector<std::vector<Instruction>> script, double lambda,
                                            const kernel::StreamKey& base) {
    InstructionStack s(script.size(), lambda, base);
    s.script_ = std::move(script);
    return s;
}

Instruction InstructionStack::decode(std::uint32_t u) const {
    if (u < sleep_threshold_) return Instruction::Sleep;
    return u < left_threshold_ ? Instruction::JumpLeft : Instruction::JumpRight;
}

Instruction InstructionStack::at(std::size_t x, std::uint64_t k) const {
    if (!script_.empty() && k < script_[x].size()) return script_[x][k];
    const std::uint64_t b = k >> 2;
    if (cached_index_[x] != b) {
        cached_block_[x] = keys_[x].block(b);
        cached_index_[x] = b;
    }
    return decode(cached_block_[x][k & 3]);
}

Instruction InstructionStack::consume(std::size_t x) {
    const Instruction ins = at(x, odometer_[x]);
    ++odometer_[x];
    ++total_;
    if (ins != Instruction::Sleep) ++jumps_;
    return ins;
}

void InstructionStack::rewind() {
    std::fill(odometer_.begin(), odometer_.end(), 0);
    jumps_ = 0;
    total_ = 0;
}

} // namespace pdl::arw
