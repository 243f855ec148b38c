#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "pdl/kernel/errors.hpp"
#include "pdl/kernel/stream.hpp"

using namespace pdl;
using namespace pdl::kernel;

TEST_CASE("philox4x32-10 known-answer vectors") {
    auto z = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);
    auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(f[0] == 0x408f276du);
    CHECK(f[1] == 0x41c83b0eu);
    CHECK(f[2] == 0xa20bc7c6u);
    CHECK(f[3] == 0x6d5451fdu);
}

TEST_CASE("derive_stream is deterministic in seed and label") {
    auto a1 = derive_stream({1, "a"});
    auto a2 = derive_stream({1, "a"});
    auto b = derive_stream({1, "b"});
    auto c = derive_stream({2, "a"});
    bool differ_label = false, differ_seed = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a1.next_u64();
        REQUIRE(x == a2.next_u64());
        differ_label |= x != b.next_u64();
        differ_seed |= x != c.next_u64();
    }
    CHECK(differ_label);
    CHECK(differ_seed);
    CHECK_THROWS_AS(derive_stream({1, ""}), ParameterError);
}

TEST_CASE("child labels compose like path strings") {
    StreamKey k(7, "arw");
    CHECK(k.child("site").child(17).child("stack") == StreamKey(7, "arw/site/17/stack"));
    CHECK_FALSE(k.child("site").child(17) == StreamKey(7, "arw/site/1/7"));
}

TEST_CASE("independence proxy between two labelled streams") {
    auto s = derive_stream({99, "exp/cell/0/replica/0"});
    auto t = derive_stream({99, "exp/cell/0/replica/1"});
    const int n = 1000000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = s.uniform(), y = t.uniform();
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sample_exponential") {
    auto s = derive_stream({3, "exp"});
    double m1 = 0, m2 = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double x = sample_exponential(s, 1.0);
        REQUIRE(x >= 0.0);
        m1 += x;
    }
    for (int i = 0; i < n; ++i) m2 += sample_exponential(s, 2.0);
    CHECK(std::abs(m1 / n - 1.0) < 0.01);
    CHECK(std::abs(m2 / n - 0.5) < 0.005);
    CHECK_THROWS_AS(sample_exponential(s, 0.0), ParameterError);
    CHECK_THROWS_AS(sample_exponential(s, -1.0), ParameterError);
}

TEST_CASE("sample_poisson_points") {
    auto s = derive_stream({4, "ppp"});
    CHECK(sample_poisson_points(s, 1.0, 0.0, 0.0).empty());
    CHECK_THROWS_AS(sample_poisson_points(s, 1.0, 1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(sample_poisson_points(s, 0.0, 0.0, 1.0), ParameterError);
    double total = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        const auto pts = sample_poisson_points(s, 1.0, 0.0, 1000.0);
        for (std::size_t i = 1; i < pts.size(); ++i) REQUIRE(pts[i] > pts[i - 1]);
        if (!pts.empty()) REQUIRE(pts.front() >= 0.0);
        if (!pts.empty()) REQUIRE(pts.back() <= 1000.0);
        total += static_cast<double>(pts.size());
    }
    CHECK(std::abs(total / reps - 1000.0) < 1.0);
}

TEST_CASE("uniform_index covers its range evenly") {
    auto s = derive_stream({5, "idx"});
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) ++hits[s.uniform_index(7)];
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
}
