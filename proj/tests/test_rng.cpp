#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "isingrbm/rng.hpp"

using namespace isingrbm;

namespace {

// Reference xoshiro256** with splitmix64 seeding, written from the published
// algorithms.
struct RefXoshiro {
    std::uint64_t s[4];
    explicit RefXoshiro(std::uint64_t seed) {
        for (auto& x : s) {
            seed += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = seed;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            x = z ^ (z >> 31);
        }
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t r = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return r;
    }
};

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("matches reference generator") {
    RefXoshiro ref(0);
    CHECK(ref.s[0] == 0xe220a8397b1dcdafULL);
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xffffffffffffffffULL}) {
        Rng rng(seed);
        RefXoshiro r(seed);
        for (int i = 0; i < 1000; ++i) REQUIRE(rng.next() == r.next());
    }
}

TEST_CASE("derive is a pure function of its keys") {
    Rng a = Rng::derive(9, {1, 2});
    Rng b = Rng::derive(9, {1, 2});
    CHECK(a == b);
    CHECK(a.next() == b.next());
    CHECK(Rng::derive(9, {1, 2}).next() != Rng::derive(9, {2, 1}).next());
    CHECK(Rng::derive(9, {1}).next() != Rng::derive(10, {1}).next());
    CHECK(Rng::derive(9, {}).next() != Rng::derive(9, {0}).next());

    Rng parent(5);
    Rng copy = parent;
    Rng child = parent.split(3);
    CHECK(copy.next() != parent.next());
    CHECK(child.next() != parent.next());
}

TEST_CASE("uniform moments") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sq / n - 1.0 / 3) < 0.005);
}

TEST_CASE("normal moments") {
    Rng rng(8);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(2.0, 3.0);
        sum += x;
        sq += (x - 2.0) * (x - 2.0);
    }
    CHECK(std::abs(sum / n - 2.0) < 4 * 3.0 / std::sqrt(n));
    CHECK(std::abs(std::sqrt(sq / n) - 3.0) < 0.03);
}

TEST_CASE("uniform_index covers its range evenly") {
    Rng rng(9);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.uniform_index(7);
        REQUIRE(k < 7);
        ++counts[k];
    }
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    CHECK(chi2 < 22.5);  // 6 dof, p ~ 0.001
    CHECK(rng.uniform_index(1) == 0);
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<int> a(50), b(50);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    Rng r1(10), r2(10);
    shuffle_indices(a.data(), a.size(), r1);
    shuffle_indices(b.data(), b.size(), r2);
    CHECK(a == b);
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(50);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
    CHECK(a != expect);
}

}  // TEST_SUITE
