#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pdeform/hierarchy.hpp"
#include "pdeform/random.hpp"

using namespace pdeform;

namespace {

// Lorenz-curve oracle: pf is majorized by p0 iff every partial sum of the
// smallest entries of pf is at least that of p0.
bool majorized_by(std::vector<double> pf, std::vector<double> p0)
{
    std::sort(pf.begin(), pf.end());
    std::sort(p0.begin(), p0.end());
    double sf = 0.0, s0 = 0.0;
    for (std::size_t l = 0; l + 1 < pf.size(); ++l) {
        sf += pf[l];
        s0 += p0[l];
        if (s0 > sf + 1e-12)
            return false;
    }
    return true;
}

std::vector<double> to_vec(const RVector& v)
{
    return {v.data(), v.data() + v.size()};
}

} // namespace

TEST_CASE("majorization check agrees with the Lorenz oracle")
{
    Rng rng(31);
    for (int k = 0; k < 300; ++k) {
        const int n = 2 + k % 7;
        const RVector p0 = random_probabilities(n, rng);
        const RVector pf = random_probabilities(n, rng);
        CHECK(majorization_check(p0, pf).passed == majorized_by(to_vec(pf), to_vec(p0)));
    }
}

TEST_CASE("majorization rejects malformed vectors")
{
    RVector p(2), q(3);
    p << 0.5, 0.6;
    q << 0.2, 0.3, 0.5;
    CHECK_THROWS_AS(majorization_check(p, p), ValidationError);
    CHECK_THROWS_AS(majorization_check(q, RVector(RVector::Constant(2, 0.5))), ValidationError);
}

TEST_CASE("a unital process cannot purify")
{
    RVector p0(3), pf(3);
    p0 << 0.5, 0.3, 0.2;
    pf << 1.0, 0.0, 0.0;
    CHECK_FALSE(majorization_check(p0, pf).passed);
    CHECK(majorization_check(pf, p0).passed);
}

TEST_CASE("truncated and binary operators keep the top l levels of B")
{
    const HermitianOperator b = HermitianOperator::diagonal(std::vector<double>{0.5, 2.0, 1.0});
    const TruncationSpec t = truncated_operator(b, 2);
    const RVector tv = t.op.diagonal_real();
    CHECK(tv(0) == doctest::Approx(0.0));
    CHECK(tv(1) == doctest::Approx(2.0));
    CHECK(tv(2) == doctest::Approx(1.0));
    const RVector bv = binary_operator(b, 1).op.diagonal_real();
    CHECK(bv(0) == doctest::Approx(0.0));
    CHECK(bv(1) == doctest::Approx(1.0));
    CHECK(bv(2) == doctest::Approx(0.0));
}

TEST_CASE("no layer fails without a demon")
{
    Rng rng(32);
    std::uniform_int_distribution<int> dim(2, 16);
    for (int k = 0; k < 400; ++k) {
        const int n = dim(rng);
        const DensityMatrix r = DensityMatrix::from_populations(random_probabilities(n, rng));
        const DensityMatrix rf = evolve(r, random_mixture(n, 1 + k % 3, rng));
        const HierarchyReport h = hierarchy_audit(r, rf);
        CHECK(h.first_violated == Layer::None);
        CHECK(*std::min_element(h.binary_slack.begin(), h.binary_slack.end()) >= -1e-9);
        CHECK(h.majorization.passed);
    }
}

TEST_CASE("violations propagate down the chain")
{
    Rng rng(33);
    int ci = 0;
    for (int k = 0; k < 400; ++k) {
        const int n = 2 + k % 6;
        const DensityMatrix r = DensityMatrix::from_populations(random_probabilities(n, rng));
        // arbitrary final states include demon-like purifications
        const DensityMatrix rf = DensityMatrix::from_populations(random_probabilities(n, rng));
        const HierarchyReport h = hierarchy_audit(r, rf);
        ci += h.ci_violated;
        CHECK(h.implication_holds);
        if (h.truncated_violated)
            CHECK(h.binary_violated);
    }
    CHECK(ci > 0);
}

TEST_CASE("coarse graining in the degenerate case reproduces Delta B")
{
    // two clusters of equal B inside, separated between
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.3, 0.3, 0.2, 0.2});
    const HermitianOperator b = neg_log_state(r).op;
    const std::vector<int> clusters{0, 0, 1, 1};
    const CoarseGrainResult cg = coarse_grain(b, clusters);
    CHECK(cg.spec.sizes == std::vector<int>{2, 2});
    Rng rng(34);
    for (int k = 0; k < 50; ++k) {
        const DensityMatrix rf = evolve(r, random_mixture(4, 2, rng));
        CHECK(std::abs((expectation(rf, cg.op) - expectation(r, cg.op)) - (expectation(rf, b) - expectation(r, b))) <=
              1e-12);
    }
}

TEST_CASE("overlapping clusters are rejected with a witness")
{
    const HermitianOperator b = HermitianOperator::diagonal(std::vector<double>{0.0, 2.0, 1.0, 3.0});
    const std::vector<int> clusters{0, 0, 1, 1};
    const auto w = cluster_overlap_witness(b, clusters);
    REQUIRE(w);
    CHECK(clusters[static_cast<std::size_t>(w->first)] != clusters[static_cast<std::size_t>(w->second)]);
    CHECK_THROWS_AS(coarse_grain(b, clusters), ValidationError);
    CHECK_FALSE(cluster_overlap_witness(HermitianOperator::diagonal(std::vector<double>{0, 1, 2, 3}), clusters));
}

TEST_CASE("coarse probability operator")
{
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.4, 0.1, 0.25, 0.25});
    const RVector d = coarse_probability_operator(r, {0, 0, 1, 1}).diagonal_real();
    CHECK(d(0) == doctest::Approx(-std::log(0.5)).epsilon(1e-14));
    CHECK(d(3) == doctest::Approx(-std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("layer names")
{
    CHECK(layer_name(Layer::CI) == "CI");
    CHECK(layer_name(Layer::Majorization) == "majorization");
}
