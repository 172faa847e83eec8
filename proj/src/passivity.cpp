#include "pdeform/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdeform {

namespace {

void check_dims(int a, int b)
{
    if (a != b)
        throw ValidationError("dimension mismatch between state and operator");
}

} // namespace

PassiveResult passive_state_of(const DensityMatrix& rho, const HermitianOperator& a)
{
    check_dims(rho.dim(), a.dim());
    const Spectrum sr = eig_sorted(HermitianOperator::trusted(rho.matrix()));
    const Spectrum sa = eig_sorted(a);
    const int n = a.dim();
    // rho eigenpairs in descending population order
    std::vector<int> desc(static_cast<std::size_t>(n));
    std::iota(desc.begin(), desc.end(), 0);
    std::reverse(desc.begin(), desc.end());
    Matrix u = Matrix::Zero(n, n);
    Matrix out = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const int src = desc[static_cast<std::size_t>(i)];
        u += sa.vectors.col(i) * sr.vectors.col(src).adjoint();
        out += std::max(0.0, sr.values(src)) * sa.vectors.col(i) * sa.vectors.col(i).adjoint();
    }
    out /= out.trace().real();
    return {DensityMatrix::trusted(out), u};
}

OrderingReport ordering_function(const HermitianOperator& a, const HermitianOperator& b, OrderingMode mode)
{
    check_dims(a.dim(), b.dim());
    const RVector la = eig_sorted(a).values;  // ascending
    const RVector lb = eig_sorted(b).values;
    const int n = a.dim();
    double prod = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ad = la(n - 1 - i);
        const double bv = mode == OrderingMode::SameOrder ? lb(n - 1 - i) : lb(i);
        prod += ad * bv;
    }
    const double tr = (a.matrix().cwiseProduct(b.matrix().transpose())).sum().real();
    OrderingReport r;
    r.mode = mode;
    r.chi_value = tr - prod;
    r.is_zero = std::abs(r.chi_value) < 1e-9 * (std::abs(tr) + std::abs(prod) + 1.0);
    return r;
}

bool is_globally_passive(const HermitianOperator& a, const DensityMatrix& rho0, double rel_tol)
{
    check_dims(a.dim(), rho0.dim());
    const int n = a.dim();
    const Spectrum sr = eig_sorted(HermitianOperator::trusted(rho0.matrix()));

    // rho-degenerate groups under a tolerance relative to the populations
    std::vector<std::vector<int>> groups;
    for (int i = 0; i < n; ++i) {
        const double p = std::max(0.0, sr.values(i));
        if (groups.empty()) {
            groups.push_back({i});
            continue;
        }
        const double q = std::max(0.0, sr.values(groups.back().back()));
        if (p - q <= rel_tol * std::max(p, q) + 1e-300)
            groups.back().push_back(i);
        else
            groups.push_back({i});
    }

    const Matrix rot = sr.vectors.adjoint() * a.matrix() * sr.vectors;
    const double scale = rot.cwiseAbs().maxCoeff() + 1.0;
    std::vector<int> group_of(static_cast<std::size_t>(n));
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int i : groups[g])
            group_of[static_cast<std::size_t>(i)] = static_cast<int>(g);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (group_of[static_cast<std::size_t>(i)] != group_of[static_cast<std::size_t>(j)] &&
                std::abs(rot(i, j)) > rel_tol * scale)
                return false;

    // A restricted to each group; groups are ordered by ascending population,
    // so A must be nonincreasing from group to group.
    const double atol = rel_tol * scale;
    double prev_min = std::numeric_limits<double>::infinity();
    for (const auto& g : groups) {
        const auto start = g.front();
        const auto len = static_cast<Eigen::Index>(g.size());
        const Matrix block = rot.block(start, start, len, len);
        const RVector ev = eig_sorted(HermitianOperator::trusted(block)).values;
        if (ev(len - 1) > prev_min + atol)
            return false;
        prev_min = std::min(prev_min, ev(0));
    }
    return true;
}

HermitianOperator gp_family(const DensityMatrix& rho0, double alpha, ZeroPopulationPolicy policy)
{
    if (alpha == 0.0)
        throw ValidationError("gp_family: alpha must be nonzero");
    const auto b = neg_log_state(rho0, policy).op;
    return operator_function(b, MonotoneMap::signed_power(alpha));
}

double min_expectation(const DensityMatrix& rho, const HermitianOperator& a)
{
    check_dims(rho.dim(), a.dim());
    const RVector p = rho.eigenvalues();  // ascending
    const RVector la = eig_sorted(a).values;
    const int n = a.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += p(n - 1 - i) * la(i);
    return s;
}

} // namespace pdeform
