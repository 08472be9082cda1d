#include <doctest.h>

#include <cmath>
#include <vector>

#include "markup/rng.hpp"

using markup::rng::Stream;

TEST_CASE("identical (seed, stream) pairs reproduce the sequence exactly") {
    Stream a(123, 5), b(123, 5);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids decorrelate") {
    Stream a(123, 0), b(123, 1);
    int coincidences = 0;
    for (int i = 0; i < 1000; ++i) coincidences += a.next_u64() == b.next_u64() ? 1 : 0;
    CHECK(coincidences == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
    Stream s(9, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    Stream s(2024, 3);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson mean matches for small and chunked regimes") {
    for (double lambda : {0.5, 3.0, 50.0}) {
        Stream s(77, static_cast<std::uint64_t>(lambda * 10));
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(s.poisson(lambda));
        const double se = std::sqrt(lambda / n);
        CHECK(std::fabs(sum / n - lambda) < 5.0 * se);
    }
}

TEST_CASE("poisson(0) is identically zero") {
    Stream s(1, 1);
    for (int i = 0; i < 100; ++i) CHECK(s.poisson(0.0) == 0);
}
