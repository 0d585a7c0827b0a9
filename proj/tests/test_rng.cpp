#include <cmath>
#include <vector>

#include "doctest.h"
#include "edgetune/rng.hpp"

using edgetune::RngStream;

TEST_CASE("identical seeds give identical sequences") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are independent of each other") {
    RngStream root(1);
    RngStream a = root.substream("alpha");
    RngStream b = root.substream("beta");
    const auto a0 = a.next_u64();
    CHECK(a0 != b.next_u64());

    // Draw order in one substream does not perturb another.
    RngStream root2(1);
    RngStream b2 = root2.substream("beta");
    b2.next_u64();
    RngStream a2 = root2.substream("alpha");
    CHECK(a2.next_u64() == a0);
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
    RngStream r(3);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("gaussian moments") {
    RngStream r(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.gaussian();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("exponential sample mean converges to 1/rate") {
    RngStream r(5);
    const int n = 100000;
    const double rate = 4.0;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.exponential(rate);
        CHECK(x >= 0.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    const double se = sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - 1.0 / rate) < 3.0 * se);
}

TEST_CASE("uniform_index covers all buckets") {
    RngStream r(9);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) ++counts[r.uniform_index(7)];
    for (int c : counts) CHECK(c > 800);
}
