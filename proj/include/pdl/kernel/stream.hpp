#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace pdl::kernel {

// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t mix64(std::uint64_t x);

// Labels are slash-separated paths such as "arw/site/17/stack". The key
// stores the running FNV-1a state of the label so that children can be
// derived without re-hashing the prefix:
//   StreamKey(s, "arw").child("site").child(17) == StreamKey(s, "arw/site/17")
class StreamKey {
public:
    StreamKey() = default;
    StreamKey(std::uint64_t master_seed, std::string_view label);

    StreamKey child(std::string_view part) const;
    StreamKey child(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    // 64-bit label digest used as the high half of the Philox counter.
    std::uint64_t label_digest() const { return mix64(fnv_); }

    // Raw 128-bit Philox block number `index` of this stream.
    std::array<std::uint32_t, 4> block(std::uint64_t index) const;

    bool operator==(const StreamKey&) const = default;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t fnv_ = 0xcbf29ce484222325ULL;
};

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::string label;
};

// Sequential reader over one labeled stream. Satisfies
// UniformRandomBitGenerator so it can be handed to std algorithms, but all
// samplers in this library use the explicit helpers below for
// cross-platform determinism.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream() = default;
    explicit Stream(const StreamKey& key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();
    std::uint32_t next_u32();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1].
    double uniform_open() { return 1.0 - uniform(); }
    // Uniform integer in [0, n), n >= 1 (Lemire's method with rejection).
    std::uint64_t uniform_index(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    const StreamKey& key() const { return key_; }
    std::uint64_t blocks_consumed() const { return counter_; }

private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int avail_ = 0;
};

Stream derive_stream(const SeedSpec& seed);

double sample_exponential(Stream& s, double rate);
// Points of a homogeneous Poisson process on [t0, t1], sorted ascending.
std::vector<double> sample_poisson_points(Stream& s, double intensity, double t0, double t1);
// Index drawn from a probability vector by inverse CDF.
std::size_t sample_discrete(Stream& s, const std::vector<double>& pmf);

// FNV-1a 64 over arbitrary bytes; used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace pdl::kernel
