#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "softbound/rng.hpp"
#include "softbound/synth.hpp"

using Catch::Approx;
using namespace softbound;

TEST_CASE("streams are deterministic and index-separated")
{
    Xoshiro256pp a = derive_stream(42, 7);
    Xoshiro256pp b = derive_stream(42, 7);
    Xoshiro256pp c = derive_stream(42, 8);
    bool differs = false;
    for (int i = 0; i < 16; ++i) {
        auto va = a.next();
        REQUIRE(va == b.next());
        differs = differs || va != c.next();
    }
    REQUIRE(differs);
}

TEST_CASE("uniform01 lands in [0, 1) with the right mean")
{
    Xoshiro256pp rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(sum / n == Approx(0.5).margin(0.005));
}

TEST_CASE("normal moments")
{
    Xoshiro256pp rng(2);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    REQUIRE(sum / n == Approx(0.0).margin(0.01));
    REQUIRE(sq / n == Approx(1.0).margin(0.02));
}

TEST_CASE("gamma moments for both Marsaglia-Tsang branches")
{
    for (double alpha : {0.4, 1.0, 2.5, 15.0}) {
        Xoshiro256pp rng(3);
        double sum = 0.0, sq = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            double v = rng.gamma(alpha);
            REQUIRE(v >= 0.0);
            sum += v;
            sq += v * v;
        }
        double mean = sum / n;
        double var = sq / n - mean * mean;
        REQUIRE(mean == Approx(alpha).epsilon(0.03));
        REQUIRE(var == Approx(alpha).epsilon(0.08));
    }
}

TEST_CASE("symmetric dirichlet is uniform on average")
{
    DirichletSpec spec{8, 1.0, 0, 99};
    Xoshiro256pp rng(99);
    std::vector<double> mean(8, 0.0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        auto p = sample_dirichlet(spec, rng);
        double sum = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            REQUIRE(p[j] >= 0.0);
            mean[j] += p[j];
            sum += p[j];
        }
        REQUIRE(sum == Approx(1.0).epsilon(1e-12));
    }
    for (double &v : mean)
        REQUIRE(v / n == Approx(1.0 / 8.0).margin(0.003));
}

TEST_CASE("concentrated dirichlet mean matches alpha_max / (alpha_max + K - 1)")
{
    DirichletSpec spec{16, 15.0, 3, 7};
    REQUIRE(spec.mu_max() == Approx(0.5));
    Xoshiro256pp rng(7);
    double mean = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i)
        mean += sample_dirichlet(spec, rng)[3];
    REQUIRE(mean / n == Approx(0.5).margin(0.005));

    DirichletSpec flat{16, 1.0, 0, 7};
    REQUIRE(flat.mu_max() == Approx(1.0 / 16.0));
}

TEST_CASE("alpha_for_mu_max inverts mu_max")
{
    for (double mu : {0.1, 0.5, 0.95}) {
        DirichletSpec spec{16, alpha_for_mu_max(mu, 16), 0, 0};
        REQUIRE(spec.mu_max() == Approx(mu).epsilon(1e-12));
    }
}
