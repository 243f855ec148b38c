#include "pdl/kernel/stream.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "pdl/kernel/errors.hpp"

namespace pdl::kernel {

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_feed(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t M0 = 0xD2511F53, M1 = 0xCD9E8D57;
    constexpr std::uint32_t W0 = 0x9E3779B9, W1 = 0xBB67AE85;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += W0;
            k[1] += W1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, c[0], hi0, lo0);
        mulhilo(M1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    return fnv_feed(0xcbf29ce484222325ULL, bytes);
}

StreamKey::StreamKey(std::uint64_t master_seed, std::string_view label)
    : seed_(master_seed), fnv_(fnv_feed(0xcbf29ce484222325ULL, label)) {}

StreamKey StreamKey::child(std::string_view part) const {
    StreamKey k = *this;
    k.fnv_ = fnv_feed(fnv_feed(fnv_, "/"), part);
    return k;
}

StreamKey StreamKey::child(std::uint64_t index) const {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, index);
    return child(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
}

std::array<std::uint32_t, 4> StreamKey::block(std::uint64_t index) const {
    const std::uint64_t d = label_digest();
    return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                       static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)},
                      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

std::uint32_t Stream::next_u32() {
    if (avail_ == 0) {
        buf_ = key_.block(counter_++);
        avail_ = 4;
    }
    return buf_[4 - avail_--];
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Stream::uniform_index(std::uint64_t n) {
    if (n == 0) throw ParameterError("uniform_index: n must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

Stream derive_stream(const SeedSpec& seed) {
    if (seed.label.empty()) throw ParameterError("derive_stream: empty stream label");
    return Stream(StreamKey(seed.master_seed, seed.label));
}

double sample_exponential(Stream& s, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw ParameterError("sample_exponential: rate must be positive and finite");
    return -std::log(s.uniform_open()) / rate;
}

std::vector<double> sample_poisson_points(Stream& s, double intensity, double t0, double t1) {
    if (!(intensity > 0.0) || !std::isfinite(intensity))
        throw ParameterError("sample_poisson_points: intensity must be positive");
    if (!(t0 <= t1)) throw ParameterError("sample_poisson_points: inverted window");
    std::vector<double> pts;
    if (t0 == t1) return pts;
    double t = t0;
    for (;;) {
        const double next = t + sample_exponential(s, intensity);
        // Guard against a gap so small that it does not advance time.
        if (next >= t1) break;
        if (next > t) pts.push_back(next);
        t = next;
    }
    return pts;
}

std::size_t sample_discrete(Stream& s, const std::vector<double>& pmf) {
    if (pmf.empty()) throw ParameterError("sample_discrete: empty pmf");
    const double u = s.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] <= 0.0) continue;
        last = i;
        acc += pmf[i];
        if (u < acc) return i;
    }
    return last;
}

} // namespace pdl::kernel
