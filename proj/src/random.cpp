#include "pdeform/random.hpp"

#include <algorithm>
#include <numeric>

namespace pdeform {

Matrix haar_unitary(int dim, Rng& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix z(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i)
            z(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        const cplx d = r(j, j);
        const double a = std::abs(d);
        if (a > 0.0)
            q.col(j) *= d / a;
    }
    return q;
}

Matrix block_haar_unitary(int dim, const std::vector<std::vector<int>>& blocks, Rng& rng)
{
    Matrix u = Matrix::Identity(dim, dim);
    for (const auto& b : blocks) {
        if (b.size() < 2)
            continue;
        const Matrix h = haar_unitary(static_cast<int>(b.size()), rng);
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                u(b[i], b[j]) = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    return u;
}

Matrix permutation_unitary(const std::vector<int>& destination)
{
    const auto n = static_cast<Eigen::Index>(destination.size());
    Matrix u = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        u(destination[static_cast<std::size_t>(i)], i) = 1.0;
    return u;
}

namespace {

std::vector<double> dirichlet_weights(int terms, Rng& rng)
{
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(static_cast<std::size_t>(terms));
    double s = 0.0;
    for (auto& x : w)
        s += (x = ex(rng));
    for (auto& x : w)
        x /= s;
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k)
        rest -= w[k];
    w.back() = rest;
    return w;
}

} // namespace

MixtureOfUnitaries random_mixture(int dim, int terms, Rng& rng)
{
    const auto w = dirichlet_weights(terms, rng);
    std::vector<UnitaryTerm> t;
    for (int k = 0; k < terms; ++k)
        t.push_back({w[static_cast<std::size_t>(k)], haar_unitary(dim, rng)});
    return MixtureOfUnitaries(std::move(t));
}

MixtureOfUnitaries random_block_mixture(int dim, const std::vector<std::vector<int>>& blocks, int terms, Rng& rng)
{
    const auto w = dirichlet_weights(terms, rng);
    std::vector<UnitaryTerm> t;
    for (int k = 0; k < terms; ++k)
        t.push_back({w[static_cast<std::size_t>(k)], block_haar_unitary(dim, blocks, rng)});
    return MixtureOfUnitaries(std::move(t));
}

RVector random_probabilities(int dim, Rng& rng)
{
    std::exponential_distribution<double> ex(1.0);
    RVector p(dim);
    for (int i = 0; i < dim; ++i)
        p(i) = ex(rng);
    return p / p.sum();
}

std::vector<int> random_permutation(int dim, Rng& rng)
{
    std::vector<int> p(static_cast<std::size_t>(dim));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

} // namespace pdeform
