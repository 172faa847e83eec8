#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pdeform/qstate.hpp"
#include "pdeform/random.hpp"

using namespace pdeform;

namespace {

Matrix pauli_x()
{
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

DensityMatrix random_state(int n, Rng& rng)
{
    const Matrix u = haar_unitary(n, rng);
    const RVector p = random_probabilities(n, rng);
    return DensityMatrix::trusted(u * p.cast<cplx>().asDiagonal() * u.adjoint());
}

} // namespace

TEST_CASE("hermitian operator validation")
{
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(HermitianOperator{m}, ValidationError);
    CHECK_NOTHROW(HermitianOperator(pauli_x()));
    CHECK(HermitianOperator::diagonal(std::vector<double>{1, 2}).is_diagonal());
    CHECK_FALSE(HermitianOperator(pauli_x()).is_diagonal());
}

TEST_CASE("density matrix validation")
{
    CHECK_THROWS_AS(DensityMatrix::from_populations(std::vector<double>{0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(DensityMatrix::from_populations(std::vector<double>{1.2, -0.2}), ValidationError);
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{0.7, 0.3});
    CHECK(r.populations()(0) == doctest::Approx(0.7));
}

TEST_CASE("thermal state matches hand Boltzmann weights")
{
    const HermitianOperator h = HermitianOperator::diagonal(std::vector<double>{0.0, 1.0, 3.0});
    const DensityMatrix t = thermal_state(h, 0.5);
    const double z = 1.0 + std::exp(-0.5) + std::exp(-1.5);
    CHECK(t.populations()(0) == doctest::Approx(1.0 / z).epsilon(1e-14));
    CHECK(t.populations()(2) == doctest::Approx(std::exp(-1.5) / z).epsilon(1e-14));
}

TEST_CASE("kron and partial trace of a product state")
{
    Rng rng(3);
    const DensityMatrix a = random_state(2, rng);
    const DensityMatrix b = random_state(3, rng);
    const DensityMatrix ab = DensityMatrix::trusted(kron(a.matrix(), b.matrix()));
    CHECK((partial_trace(ab, {2, 3}, {0}).matrix() - a.matrix()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((partial_trace(ab, {2, 3}, {1}).matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(mutual_information(ab, {2, 3}, {0}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bell state mutual information is 2 ln 2")
{
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    const DensityMatrix bell = DensityMatrix::pure(psi);
    CHECK(entropy(bell) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mutual_information(bell, {2, 2}, {0}) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("relative entropy is nonnegative and zero on equal arguments")
{
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix r = random_state(3, rng);
        const DensityMatrix s = random_state(3, rng);
        CHECK(relative_entropy(r, s) >= -1e-12);
        CHECK(std::abs(relative_entropy(r, r)) < 1e-10);
    }
}

TEST_CASE("unitary power interpolates")
{
    Rng rng(7);
    const Matrix u = haar_unitary(4, rng);
    CHECK((unitary_power(u, 1.0) - u).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((unitary_power(u, 0.0) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix h = unitary_power(u, 0.5);
    CHECK(is_unitary(h));
    CHECK((h * h - u).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hamiltonian evolution conserves energy")
{
    Rng rng(11);
    const DensityMatrix r = random_state(4, rng);
    const Matrix g = haar_unitary(4, rng);
    const HermitianOperator h = HermitianOperator::trusted(g * RVector::LinSpaced(4, 0, 3).cast<cplx>().asDiagonal() *
                                                           g.adjoint());
    const DensityMatrix rt = evolve_hamiltonian(r, h, 1.7);
    CHECK(expectation(rt, h) == doctest::Approx(expectation(r, h)).epsilon(1e-12));
}

TEST_CASE("mixture of unitaries keeps trace and rejects bad weights")
{
    Rng rng(13);
    const MixtureOfUnitaries m = random_mixture(3, 3, rng);
    const DensityMatrix r = evolve(random_state(3, rng), m);
    CHECK(r.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(MixtureOfUnitaries({{0.5, Matrix::Identity(2, 2)}}), ValidationError);
    CHECK_THROWS_AS(MixtureOfUnitaries({{1.0, Matrix::Ones(2, 2)}}), ValidationError);
}

TEST_CASE("neg log of a rank-deficient state")
{
    const DensityMatrix r = DensityMatrix::from_populations(std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(neg_log_state(r), DomainError);
    const FunctionResult f = neg_log_state(r, ZeroPopulationPolicy::Clamp);
    CHECK(f.clamped == 1);
    CHECK(f.op.diagonal_real()(0) == doctest::Approx(0.0));
}

TEST_CASE("common eigenbasis resolves degeneracies and rejects noncommuting pairs")
{
    const HermitianOperator a = HermitianOperator::diagonal(std::vector<double>{1, 1, 2});
    Matrix m = Matrix::Zero(3, 3);
    m(0, 1) = m(1, 0) = 1.0;
    const CommonBasis cb = common_eigenbasis(a, HermitianOperator(m));
    const Matrix d = cb.basis.adjoint() * m * cb.basis;
    CHECK((d - Matrix(d.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(common_eigenbasis(HermitianOperator::diagonal(std::vector<double>{0, 1}),
                                      HermitianOperator(pauli_x())),
                    ValidationError);
}

TEST_CASE("tensor embed honours the dimension cap")
{
    const std::vector<EmbedSlot> slots{HermitianOperator(pauli_x()), IdentitySlot{3}};
    CHECK(tensor_embed(slots).dim() == 6);
    CHECK_THROWS_AS(tensor_embed(slots, 4), ResourceError);
}

TEST_CASE("haar unitaries are unitary")
{
    Rng rng(17);
    for (int n = 1; n <= 6; ++n)
        CHECK(is_unitary(haar_unitary(n, rng)));
}
