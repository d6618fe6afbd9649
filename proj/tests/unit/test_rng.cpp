#include "jumpgreeks/parallel.hpp"
#include "jumpgreeks/rng.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <stdexcept>
#include <vector>

using namespace jumpgreeks;

TEST_CASE("substreams are deterministic and distinct")
{
    CHECK(substream_seed(42, 7) == substream_seed(42, 7));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        seen.insert(substream_seed(42, i));
    }
    CHECK(seen.size() == 10000);
    CHECK(substream_seed(1, 0) != substream_seed(2, 0));

    Stream a = make_stream(9, 3);
    Stream b = make_stream(9, 3);
    for (int k = 0; k < 100; ++k) {
        CHECK(a() == b());
    }
}

TEST_CASE("parallel_for result does not depend on the worker count")
{
    const std::size_t n = 5000;
    auto run = [&](unsigned workers) {
        std::vector<double> out(n);
        parallel_for(n, workers, [&](std::size_t i) {
            Stream s = make_stream(11, i);
            std::uniform_real_distribution<double> u;
            out[i] = u(s);
        });
        return compensated_sum(out);
    };
    const double one = run(1);
    CHECK(run(2) == one);
    CHECK(run(7) == one);
    CHECK(run(0) == one);
}

TEST_CASE("parallel_for forwards exceptions")
{
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 57) {
                                         throw std::runtime_error("boom");
                                     }
                                 }),
                    std::runtime_error);
}

TEST_CASE("compensated summation recovers cancelled terms")
{
    const std::vector<double> v{1e16, 1.0, -1e16};
    CHECK(compensated_sum(v) == 1.0);
    std::vector<double> many(1000000, 0.1);
    CHECK(compensated_sum(many) == doctest::Approx(100000.0).epsilon(1e-15));
}
