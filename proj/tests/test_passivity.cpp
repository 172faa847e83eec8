#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "pdeform/passivity.hpp"
#include "pdeform/random.hpp"

using namespace pdeform;

namespace {

DensityMatrix random_state(int n, Rng& rng)
{
    const Matrix u = haar_unitary(n, rng);
    const RVector p = random_probabilities(n, rng);
    return DensityMatrix::trusted(u * p.cast<cplx>().asDiagonal() * u.adjoint());
}

HermitianOperator random_observable(int n, Rng& rng)
{
    const Matrix u = haar_unitary(n, rng);
    RVector v(n);
    std::normal_distribution<double> g;
    for (int i = 0; i < n; ++i)
        v(i) = g(rng);
    return HermitianOperator::trusted(u * v.cast<cplx>().asDiagonal() * u.adjoint());
}

// Rearrangement oracle: largest weights on smallest values.
double rearrangement_min(std::vector<double> p, std::vector<double> a)
{
    std::sort(p.begin(), p.end(), std::greater<>());
    std::sort(a.begin(), a.end());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += p[i] * a[i];
    return s;
}

std::vector<double> to_vec(const RVector& v)
{
    return {v.data(), v.data() + v.size()};
}

} // namespace

TEST_CASE("passive state attains the rearrangement minimum")
{
    Rng rng(1);
    for (int k = 0; k < 30; ++k) {
        const int n = 2 + k % 5;
        const DensityMatrix r = random_state(n, rng);
        const HermitianOperator a = random_observable(n, rng);
        const double oracle = rearrangement_min(to_vec(r.eigenvalues()), to_vec(eig_sorted(a).values));
        const PassiveResult p = passive_state_of(r, a);
        CHECK(expectation(p.state, a) == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(min_expectation(r, a) == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(is_unitary(p.unitary));
    }
}

TEST_CASE("no unitary lowers below the passive value")
{
    Rng rng(2);
    const DensityMatrix r = random_state(4, rng);
    const HermitianOperator a = random_observable(4, rng);
    const double floor = min_expectation(r, a);
    for (int k = 0; k < 200; ++k)
        CHECK(expectation(conjugate(r, haar_unitary(4, rng)), a) >= floor - 1e-12);
}

TEST_CASE("B = -ln rho0 is globally passive")
{
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix r = DensityMatrix::from_populations(random_probabilities(5, rng));
        const HermitianOperator b = neg_log_state(r).op;
        CHECK(is_globally_passive(b, r));
        CHECK_FALSE(is_globally_passive(b * -1.0, r));
        for (double alpha : {0.5, 1.0, 2.56})
            CHECK(is_globally_passive(gp_family(r, alpha), r));
    }
}

TEST_CASE("gp family values")
{
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.5, 0.3, 0.2});
    const RVector b2 = gp_family(r, 2.0).diagonal_real();
    CHECK(b2(0) == doctest::Approx(std::pow(std::log(2.0), 2)).epsilon(1e-13));
    CHECK(b2(2) == doctest::Approx(std::pow(std::log(5.0), 2)).epsilon(1e-13));
    const RVector bm = gp_family(r, -1.0).diagonal_real();
    CHECK(bm(0) == doctest::Approx(-1.0 / std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("ordering function vanishes exactly for co-ordered commuting pairs")
{
    const HermitianOperator a = HermitianOperator::diagonal(std::vector<double>{0, 1, 2});
    const HermitianOperator b = HermitianOperator::diagonal(std::vector<double>{-1, 0, 5});
    CHECK(ordering_function(a, b, OrderingMode::SameOrder).is_zero);
    CHECK_FALSE(ordering_function(a, b, OrderingMode::ReverseOrder).is_zero);
    CHECK(ordering_function(a, b * -1.0, OrderingMode::ReverseOrder).is_zero);
    Rng rng(4);
    const HermitianOperator c = random_observable(3, rng);
    CHECK(ordering_function(a, c, OrderingMode::SameOrder).chi_value <= 1e-12);
}
