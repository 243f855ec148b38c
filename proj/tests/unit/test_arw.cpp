#include <cmath>
#include "doctest.h"

#include "pdl/arw/stabilize.hpp"
#include "pdl/kernel/errors.hpp"

using namespace pdl;
using namespace pdl::arw;

namespace {
const auto JL = Instruction::JumpLeft;
const auto JR = Instruction::JumpRight;
const auto SL = Instruction::Sleep;
} // namespace

TEST_CASE("topple: single sleep") {
    auto c = RingConfig::parse("A1,E");
    auto s = InstructionStack::scripted({{SL}, {}});
    const auto t = topple(c, s, 0);
    CHECK(t.instruction == SL);
    CHECK(c.str() == "[S,E]");
    CHECK(s.odometer(0) == 1);
    CHECK(s.odometer(1) == 0);
    CHECK(s.jumps_consumed() == 0);
}

TEST_CASE("topple: jump from a double site") {
    auto c = RingConfig::parse("A2,E");
    auto s = InstructionStack::scripted({{JR}, {}});
    topple(c, s, 0);
    CHECK(c.str() == "[A1,A1]");
    CHECK(s.jumps_consumed() == 1);
}

TEST_CASE("topple: arrival wakes a sleeper") {
    auto c = RingConfig::parse("A1,S");
    auto s = InstructionStack::scripted({{JR}, {}});
    topple(c, s, 0);
    CHECK(c.str() == "[E,A2]");
    CHECK(c.particle_count() == 2);
}

TEST_CASE("topple: sleep on a double site only consumes") {
    auto c = RingConfig::parse("A2,E,E");
    auto s = InstructionStack::scripted({{SL}, {}, {}});
    topple(c, s, 0);
    CHECK(c.str() == "[A2,E,E]");
    CHECK(s.odometer(0) == 1);
}

TEST_CASE("topple: stable sites cannot be toppled") {
    auto c = RingConfig::parse("S,E");
    auto s = InstructionStack::scripted({{SL}, {SL}});
    CHECK_THROWS_AS(topple(c, s, 0), IllegalToppling);
    CHECK_THROWS_AS(topple(c, s, 1), IllegalToppling);
    CHECK(s.odometer(0) == 0);
}

TEST_CASE("topple: left jump wraps around the ring") {
    auto c = RingConfig::parse("A1,E,E");
    auto s = InstructionStack::scripted({{JL}, {}, {}});
    topple(c, s, 0);
    CHECK(c.str() == "[E,E,A1]");
}

TEST_CASE("stabilize: hand-enumerated two-site example") {
    auto c = RingConfig::parse("A2,E");
    auto s = InstructionStack::scripted({{JR, SL}, {SL}});
    const auto r = stabilize(c, s);
    CHECK(r.terminated);
    CHECK(c.str() == "[S,S]");
    CHECK(r.odometer.m == std::vector<std::uint64_t>{2, 1});
    CHECK(r.odometer.jumps == 1);
}

TEST_CASE("stabilize: all-sleeping input is unchanged") {
    auto c = RingConfig::parse("S,S,E,S");
    InstructionStack s(4, 1.0, kernel::StreamKey(1, "t"));
    const auto r = stabilize(c, s);
    CHECK(r.terminated);
    CHECK(r.odometer.total() == 0);
    CHECK(r.odometer.jumps == 0);
    CHECK(c.str() == "[S,S,E,S]");
}

TEST_CASE("stabilize: N=4 with 4 particles terminates") {
    int ok = 0;
    for (int seed = 0; seed < 1000; ++seed) {
        auto c = RingConfig::from_counts({1, 1, 1, 1});
        InstructionStack s(4, 1.0, kernel::StreamKey(static_cast<std::uint64_t>(seed), "arw/n4"));
        const auto r = stabilize(c, s, SchedulingPolicy::leftmost(), 1'000'000);
        if (r.terminated) {
            ++ok;
            for (std::size_t x = 0; x < 4; ++x) REQUIRE(c[x].is_sleeping());
        }
        REQUIRE(c.particle_count() == 4);
        REQUIRE(r.odometer.jumps <= r.odometer.total());
    }
    CHECK(ok >= 990);
}

TEST_CASE("stabilize: cap exhaustion is reported by flag") {
    auto c = RingConfig::from_counts({1, 1, 1, 1, 1});
    InstructionStack s(5, 0.1, kernel::StreamKey(1, "cap"));
    const auto r = stabilize(c, s, SchedulingPolicy::leftmost(), 3);
    CHECK_FALSE(r.terminated);
    CHECK(r.steps == 3);
}

TEST_CASE("instruction frequencies follow the sleep rate") {
    const double lambda = 1.5;
    InstructionStack s(1, lambda, kernel::StreamKey(11, "freq"));
    int counts[3] = {0, 0, 0};
    const int n = 300000;
    for (int k = 0; k < n; ++k) ++counts[static_cast<int>(s.at(0, static_cast<std::uint64_t>(k)))];
    const double pj = 1.0 / (2.0 * (1.0 + lambda)), ps = lambda / (1.0 + lambda);
    const double sd = std::sqrt(pj * (1 - pj) / n);
    CHECK(std::abs(counts[0] / double(n) - pj) < 5 * sd);
    CHECK(std::abs(counts[1] / double(n) - pj) < 5 * sd);
    CHECK(std::abs(counts[2] / double(n) - ps) < 5 * sd);
}

TEST_CASE("stacks replay identically regardless of access order") {
    InstructionStack a(3, 1.0, kernel::StreamKey(5, "replay"));
    InstructionStack b(3, 1.0, kernel::StreamKey(5, "replay"));
    std::vector<Instruction> fwd, bwd(40);
    for (std::uint64_t k = 0; k < 40; ++k) fwd.push_back(a.at(1, k));
    for (std::uint64_t k = 40; k-- > 0;) bwd[k] = b.at(1, k);
    CHECK(fwd == bwd);
}

TEST_CASE("abelian_check: single unstable site") {
    auto c = RingConfig::parse("A1,E,E");
    InstructionStack s(3, 1.0, kernel::StreamKey(2, "ab1"));
    const auto rep = abelian_check(c, s, {SchedulingPolicy::leftmost(), SchedulingPolicy::rightmost()});
    CHECK(rep.verdict == AbelianVerdict::Agree);
}

TEST_CASE("abelian_check: N=3, 2 particles, random stacks and policies") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto c = RingConfig::from_counts({2, 0, 0});
        InstructionStack s(3, 1.0, kernel::StreamKey(seed, "ab3"));
        std::vector<SchedulingPolicy> pol;
        for (std::uint64_t p = 0; p < 10; ++p)
            pol.push_back(SchedulingPolicy::uniform_random(kernel::StreamKey(seed, "pol").child(p)));
        REQUIRE(abelian_check(c, s, pol).verdict == AbelianVerdict::Agree);
    }
}

TEST_CASE("abelian_check: non-terminating runs are inconclusive, not false") {
    auto c = RingConfig::from_counts({1, 1, 1});
    InstructionStack s(3, 0.5, kernel::StreamKey(1, "inc"));
    const auto rep = abelian_check(c, s, {SchedulingPolicy::leftmost(), SchedulingPolicy::rightmost()}, 2);
    CHECK(rep.verdict == AbelianVerdict::Inconclusive);
}

TEST_CASE("exhaustive search over legal orders: N=5, 4 particles") {
    for (double lambda : {0.5, 1.0, 4.0}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto c = RingConfig::from_counts({2, 0, 1, 1, 0});
            InstructionStack s(5, lambda, kernel::StreamKey(seed, "exh"));
            const auto ex = explore_all_orders(c, s, 3'000'000);
            if (!ex.complete) continue;
            REQUIRE(ex.terminal_odometers.size() == 1);
            auto c2 = c;
            auto s2 = s;
            stabilize(c2, s2);
            CHECK(ex.terminal_odometers[0] == s2.odometers());
        }
    }
}

TEST_CASE("pre_flatten") {
    SUBCASE("flat config is unchanged") {
        auto c = RingConfig::parse("A1,E,S,A1");
        InstructionStack s(4, 1.0, kernel::StreamKey(1, "pf"));
        const auto r = pre_flatten(c, s, 100);
        CHECK(r.completed);
        CHECK(r.odometer.total() == 0);
        CHECK(c.str() == "[A1,E,S,A1]");
    }
    SUBCASE("double site spreads out") {
        int ok = 0;
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            auto c = RingConfig::parse("A2,E,E,E");
            InstructionStack s(4, 1.0, kernel::StreamKey(seed, "pf2"));
            const auto r = pre_flatten(c, s, 100000);
            REQUIRE(c.particle_count() == 2);
            if (r.completed && c.max_one_per_site()) ++ok;
        }
        CHECK(ok == 1000);
    }
}

TEST_CASE("mass conservation and monotone odometer along a random run") {
    auto c = RingConfig::from_counts({3, 0, 2, 0, 0, 1, 0, 0});
    InstructionStack s(8, 1.0, kernel::StreamKey(8, "mass"));
    auto pol = SchedulingPolicy::uniform_random(kernel::StreamKey(8, "mass/pol"));
    std::vector<std::uint64_t> prev = s.odometers();
    while (!c.is_stable()) {
        topple(c, s, pol.select(c));
        REQUIRE(c.particle_count() == 6);
        for (std::size_t x = 0; x < 8; ++x) REQUIRE(s.odometer(x) >= prev[x]);
        prev = s.odometers();
    }
    for (std::size_t x = 0; x < 8; ++x) CHECK_FALSE(c[x].is_active());
}
