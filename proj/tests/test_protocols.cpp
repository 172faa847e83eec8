#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdeform/harness.hpp"
#include "pdeform/protocols.hpp"
#include "pdeform/random.hpp"

using namespace pdeform;

namespace {

// Brute force over index permutations (independent of value multiplicities).
double brute_min(const RVector& p, const RVector& a)
{
    std::vector<int> s(static_cast<std::size_t>(p.size()));
    std::iota(s.begin(), s.end(), 0);
    double best = kInf;
    do {
        double v = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            v += p(i) * a(s[static_cast<std::size_t>(i)]);
        best = std::min(best, v);
    } while (std::next_permutation(s.begin(), s.end()));
    return best;
}

} // namespace

TEST_CASE("transposition count")
{
    CHECK(transposition_count({0, 1, 2}) == 0);
    CHECK(transposition_count({1, 0, 2}) == 1);
    CHECK(transposition_count({1, 2, 0}) == 2);
    CHECK(transposition_count({1, 0, 3, 2}) == 2);
}

TEST_CASE("full and partial sorts reach the brute-force minimum")
{
    Rng rng(41);
    std::uniform_int_distribution<int> dim(2, 7), level(0, 2);
    for (int k = 0; k < 60; ++k) {
        const int n = dim(rng);
        RVector a(n);
        for (int i = 0; i < n; ++i)
            a(i) = level(rng);
        const DensityMatrix r = DensityMatrix::from_populations(random_probabilities(n, rng));
        const HermitianOperator op = HermitianOperator::diagonal(a);
        const double oracle = brute_min(r.populations(), a);
        const SortingProtocol full = optimal_protocol(r, op, false);
        const SortingProtocol part = optimal_protocol(r, op, true);
        CHECK(full.achieved_value == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(part.achieved_value == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(part.transpositions <= full.transpositions);
        CHECK(expectation(conjugate(r, full.unitary), op) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(exhaustive_min_value(r.populations(), a) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("passive input needs no moves")
{
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.5, 0.3, 0.2});
    const SortingProtocol p = optimal_protocol(r, HermitianOperator::diagonal(std::vector<double>{0, 1, 2}), false);
    CHECK(p.transpositions == 0);
}

TEST_CASE("partial sort is strictly cheaper for the depletion task")
{
    const SetupSpec s = parse_setup(std::string(PDEFORM_DATA_DIR) + "/optimal_protocol_demo.setup");
    const DensityMatrix r = initial_state(s);
    const HermitianOperator p1 = observable(s, "P1_S");
    const SortingProtocol full = optimal_protocol(r, p1, false);
    const SortingProtocol part = optimal_protocol(r, p1, true);
    CHECK(part.achieved_value == doctest::Approx(full.achieved_value).epsilon(1e-12));
    CHECK(part.transpositions < full.transpositions);
}

TEST_CASE("partial mode requires a commuting state")
{
    Rng rng(42);
    const Matrix u = haar_unitary(3, rng);
    const DensityMatrix r = conjugate(DensityMatrix::from_populations(std::vector<double>{0.6, 0.3, 0.1}), u);
    CHECK_THROWS_AS(optimal_protocol(r, HermitianOperator::diagonal(std::vector<double>{0, 0, 1}), true),
                    ValidationError);
}

TEST_CASE("exhaustive search refuses oversize inputs")
{
    CHECK_THROWS_AS(exhaustive_min_value(RVector::Constant(14, 1.0 / 14), RVector::LinSpaced(14, 0, 13), 1000),
                    ResourceError);
}

TEST_CASE("demon channel validation and p = 0 identity")
{
    const DemonChannel d = DemonChannel::from_replacements(4, {{1, 2}}, 1.0);
    CHECK(d.dim() == 4);
    CHECK_THROWS_AS(d.with_p(1.5), ValidationError);
    CHECK_THROWS_AS(DemonChannel::from_replacements(4, {{1, 2}, {1, 3}}, 1.0), ValidationError);
    CHECK_THROWS_AS(DemonChannel({Matrix::Identity(2, 2) * 0.5}, {Matrix::Identity(2, 2)}, 1.0), ValidationError);
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.1, 0.4, 0.2, 0.3});
    CHECK((demon_evolve(r, d.with_p(0.0)).matrix() - r.matrix()).cwiseAbs().maxCoeff() < 1e-15);
    const RVector after = demon_evolve(r, d).populations();
    CHECK(after(1) == doctest::Approx(0.0));
    CHECK(after(2) == doctest::Approx(0.6));
}

TEST_CASE("detection threshold brackets the first violation")
{
    // moves population from the least to the most likely level: CI violated for any p > 0
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.5, 0.3, 0.2});
    const DemonChannel d = DemonChannel::from_replacements(3, {{2, 0}}, 1.0);
    const MixtureOfUnitaries id = MixtureOfUnitaries::single(Matrix::Identity(3, 3));
    const double t = detection_threshold(r, id, d, ci_evaluator(r));
    CHECK(t > 0.0);
    CHECK(t <= 0.01 + 1e-12);
    const DemonChannel harmless = DemonChannel::from_replacements(3, {{0, 2}}, 1.0);
    CHECK(std::isinf(detection_threshold(r, id, harmless, ci_evaluator(r))));
}

TEST_CASE("gap decomposition identity")
{
    Rng rng(43);
    for (int k = 0; k < 30; ++k) {
        const int ds = 2 + k % 3, de = 2 + k % 5;
        const Matrix v = haar_unitary(ds, rng);
        const RVector p = random_probabilities(ds, rng);
        const DensityMatrix sys = DensityMatrix::trusted(v * p.cast<cplx>().asDiagonal() * v.adjoint());
        const HermitianOperator h = HermitianOperator::diagonal(RVector(RVector::LinSpaced(de, 0.0, 1.5)));
        const CIGapDecomposition g = ci_gap_decomposition(sys, h, 0.8, haar_unitary(ds * de, rng));
        CHECK(std::abs(g.residual()) < 1e-10);
        CHECK(g.D_correlation >= -1e-12);
        CHECK(g.D_env_displacement >= -1e-12);
    }
}
