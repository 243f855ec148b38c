#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pdl::arw {

// One of Empty | Sleeping | Active(k). Encoded as 0, -1, k.
class SiteState {
public:
    constexpr SiteState() = default;
    static constexpr SiteState empty() { return SiteState(0); }
    static constexpr SiteState sleeping() { return SiteState(-1); }
    static SiteState active(int k);

    constexpr bool is_empty() const { return raw_ == 0; }
    constexpr bool is_sleeping() const { return raw_ < 0; }
    constexpr bool is_active() const { return raw_ > 0; }
    // Number of particles on the site.
    constexpr int count() const { return raw_ < 0 ? 1 : raw_; }
    constexpr std::int32_t raw() const { return raw_; }

    // An arriving particle wakes a sleeper (s + 1 = 2).
    constexpr SiteState plus_one() const { return SiteState(raw_ < 0 ? 2 : raw_ + 1); }

    std::string str() const;
    constexpr bool operator==(const SiteState&) const = default;

private:
    constexpr explicit SiteState(std::int32_t r) : raw_(r) {}
    std::int32_t raw_ = 0;
};

class RingConfig {
public:
    RingConfig() = default;
    explicit RingConfig(std::size_t n);
    explicit RingConfig(std::vector<SiteState> states);
    // Active(c) on sites with c > 0.
    static RingConfig from_counts(const std::vector<int>& counts);
    // Parses "A2,E,S,A1" style strings.
    static RingConfig parse(const std::string& text);

    std::size_t size() const { return states_.size(); }
    SiteState operator[](std::size_t x) const { return states_[x]; }
    void set(std::size_t x, SiteState s);
    const std::vector<SiteState>& states() const { return states_; }

    std::size_t left(std::size_t x) const { return x == 0 ? states_.size() - 1 : x - 1; }
    std::size_t right(std::size_t x) const { return x + 1 == states_.size() ? 0 : x + 1; }

    std::uint64_t particle_count() const { return particles_; }
    std::size_t unstable_count() const { return unstable_; }
    bool is_stable() const { return unstable_ == 0; }
    bool max_one_per_site() const;

    // Unstable-site queries; return size() when there is none.
    std::size_t leftmost_unstable() const;
    std::size_t rightmost_unstable() const;
    // First unstable site at or cyclically after `from`.
    std::size_t next_unstable_from(std::size_t from) const;
    // k-th unstable site in increasing order, 0-based.
    std::size_t kth_unstable(std::size_t k) const;

    std::string str() const;
    bool operator==(const RingConfig& o) const { return states_ == o.states_; }

private:
    std::vector<SiteState> states_;
    std::vector<std::uint64_t> bits_;
    std::uint64_t particles_ = 0;
    std::size_t unstable_ = 0;
};

} // namespace pdl::arw
