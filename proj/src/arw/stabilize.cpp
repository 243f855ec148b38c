#include "pdl/arw/stabilize.hpp"

#include <functional>
#include <numeric>
#include <set>

#include "pdl/kernel/errors.hpp"

namespace pdl::arw {

std::uint64_t Odometer::total() const {
    return std::accumulate(m.begin(), m.end(), std::uint64_t{0});
}

ToppleResult topple(RingConfig& config, InstructionStack& stacks, std::size_t x) {
    const SiteState s = config[x];
    if (!s.is_active())
        throw IllegalToppling("illegal toppling at site " + std::to_string(x) + " (" + s.str() + ")");
    const Instruction ins = stacks.consume(x);
    if (ins == Instruction::Sleep) {
        if (s.count() == 1) config.set(x, SiteState::sleeping());
        return {ins, x};
    }
    const std::size_t y = ins == Instruction::JumpLeft ? config.left(x) : config.right(x);
    config.set(x, s.count() == 1 ? SiteState::empty() : SiteState::active(s.count() - 1));
    config.set(y, config[y].plus_one());
    return {ins, y};
}

SchedulingPolicy SchedulingPolicy::leftmost() { return SchedulingPolicy(); }

SchedulingPolicy SchedulingPolicy::rightmost() {
    SchedulingPolicy p;
    p.kind_ = Kind::Rightmost;
    return p;
}

SchedulingPolicy SchedulingPolicy::cyclic(std::size_t start) {
    SchedulingPolicy p;
    p.kind_ = Kind::Cyclic;
    p.start_ = p.cursor_ = start;
    return p;
}

SchedulingPolicy SchedulingPolicy::uniform_random(const kernel::StreamKey& key) {
    SchedulingPolicy p;
    p.kind_ = Kind::UniformRandom;
    p.key_ = key;
    p.stream_ = kernel::Stream(key);
    return p;
}

std::string SchedulingPolicy::name() const {
    switch (kind_) {
    case Kind::Leftmost: return "leftmost";
    case Kind::Rightmost: return "rightmost";
    case Kind::Cyclic: return "cyclic@" + std::to_string(start_);
    case Kind::UniformRandom: return "random";
    }
    return "?";
}

std::size_t SchedulingPolicy::select(const RingConfig& config) {
    switch (kind_) {
    case Kind::Leftmost: return config.leftmost_unstable();
    case Kind::Rightmost: return config.rightmost_unstable();
    case Kind::Cyclic: {
        const std::size_t x = config.next_unstable_from(cursor_);
        cursor_ = x + 1;
        return x;
    }
    case Kind::UniformRandom:
        return config.kth_unstable(stream_.uniform_index(config.unstable_count()));
    }
    return config.size();
}

void SchedulingPolicy::reset() {
    cursor_ = start_;
    if (kind_ == Kind::UniformRandom) stream_ = kernel::Stream(key_);
}

StabilizeResult stabilize(RingConfig& config, InstructionStack& stacks, SchedulingPolicy policy,
                          std::uint64_t step_cap) {
    if (stacks.size() != config.size()) throw ParameterError("stabilize: stack/ring size mismatch");
    StabilizeResult r;
    r.odometer.m.assign(config.size(), 0);
    while (!config.is_stable()) {
        if (r.steps >= step_cap) return r;
        const std::size_t x = policy.select(config);
        const ToppleResult t = topple(config, stacks, x);
        ++r.odometer.m[x];
        if (t.instruction != Instruction::Sleep) ++r.odometer.jumps;
        ++r.steps;
    }
    r.terminated = true;
    return r;
}

FlattenResult pre_flatten(RingConfig& config, InstructionStack& stacks, std::uint64_t step_cap) {
    if (stacks.size() != config.size()) throw ParameterError("pre_flatten: stack/ring size mismatch");
    FlattenResult r;
    r.odometer.m.assign(config.size(), 0);
    std::vector<std::size_t> work;
    for (std::size_t x = 0; x < config.size(); ++x)
        if (config[x].count() >= 2) work.push_back(x);
    std::uint64_t steps = 0;
    while (!work.empty()) {
        const std::size_t x = work.back();
        if (config[x].count() < 2) {
            work.pop_back();
            continue;
        }
        if (steps >= step_cap) return r;
        const ToppleResult t = topple(config, stacks, x);
        ++steps;
        ++r.odometer.m[x];
        if (t.instruction != Instruction::Sleep) {
            ++r.odometer.jumps;
            if (config[t.target].count() >= 2) work.push_back(t.target);
        }
    }
    r.completed = true;
    return r;
}

std::string to_string(AbelianVerdict v) {
    switch (v) {
    case AbelianVerdict::Agree: return "agree";
    case AbelianVerdict::Disagree: return "disagree";
    case AbelianVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

AbelianReport abelian_check(const RingConfig& config, const InstructionStack& stacks,
                            std::vector<SchedulingPolicy> policies, std::uint64_t step_cap) {
    if (policies.empty()) throw ParameterError("abelian_check: no policies");
    AbelianReport rep;
    bool all_terminated = true;
    for (auto& p : policies) {
        RingConfig c = config;
        InstructionStack s = stacks;
        s.rewind();
        p.reset();
        StabilizeResult r = stabilize(c, s, p, step_cap);
        all_terminated = all_terminated && r.terminated;
        rep.finals.push_back(std::move(c));
        rep.odometers.push_back(std::move(r.odometer));
    }
    if (!all_terminated) {
        rep.verdict = AbelianVerdict::Inconclusive;
        return rep;
    }
    rep.verdict = AbelianVerdict::Agree;
    for (std::size_t i = 1; i < policies.size(); ++i)
        if (!(rep.finals[i] == rep.finals[0]) || !(rep.odometers[i] == rep.odometers[0]))
            rep.verdict = AbelianVerdict::Disagree;
    return rep;
}

ExhaustiveResult explore_all_orders(const RingConfig& config, const InstructionStack& stacks,
                                    std::size_t max_states) {
    ExhaustiveResult res;
    InstructionStack base = stacks;
    base.rewind();
    std::set<std::vector<std::uint64_t>> seen;
    std::set<std::vector<std::uint64_t>> terminals;

    struct Frame {
        RingConfig config;
        InstructionStack stacks;
    };
    std::vector<Frame> todo;
    todo.push_back({config, base});
    seen.insert(base.odometers());
    while (!todo.empty()) {
        Frame f = std::move(todo.back());
        todo.pop_back();
        ++res.states_visited;
        if (f.config.is_stable()) {
            terminals.insert(f.stacks.odometers());
            continue;
        }
        for (std::size_t x = 0; x < f.config.size(); ++x) {
            if (!f.config[x].is_active()) continue;
            Frame g = f;
            topple(g.config, g.stacks, x);
            if (!seen.insert(g.stacks.odometers()).second) continue;
            if (seen.size() > max_states) {
                res.terminal_odometers.assign(terminals.begin(), terminals.end());
                return res;
            }
            todo.push_back(std::move(g));
        }
    }
    res.terminal_odometers.assign(terminals.begin(), terminals.end());
    res.complete = true;
    return res;
}

} // namespace pdl::arw
