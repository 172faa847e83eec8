#include "pdeform/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pdeform/errors.hpp"
#include "pdeform/hierarchy.hpp"
#include "pdeform/passivity.hpp"
#include "pdeform/random.hpp"

namespace pdeform {

namespace {

double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Full sort: the populations are made nonincreasing along the axis of A
// eigenvalues (ascending, ties in basis order). Equal populations keep their
// axis order, so an already sorted distribution maps onto itself.
std::vector<int> sorting_permutation(const RVector& q, const RVector& a)
{
    const auto n = static_cast<int>(q.size());
    std::vector<int> axis(static_cast<std::size_t>(n));
    std::iota(axis.begin(), axis.end(), 0);
    std::stable_sort(axis.begin(), axis.end(), [&](int i, int j) { return a(i) < a(j); });
    std::vector<int> by_pop = axis;
    std::stable_sort(by_pop.begin(), by_pop.end(), [&](int i, int j) { return q(i) > q(j); });
    std::vector<int> dest(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < dest.size(); ++k)
        dest[static_cast<std::size_t>(by_pop[k])] = axis[k];
    return dest;
}

// Removes every cycle step whose source and target share an A-block.
void short_circuit(std::vector<int>& dest, const std::vector<int>& block)
{
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<int> pred(dest.size());
        for (std::size_t i = 0; i < dest.size(); ++i)
            pred[static_cast<std::size_t>(dest[i])] = static_cast<int>(i);
        for (std::size_t x = 0; x < dest.size(); ++x) {
            const int next = dest[x];
            if (next == static_cast<int>(x) || block[x] != block[static_cast<std::size_t>(next)])
                continue;
            dest[static_cast<std::size_t>(pred[x])] = next;
            dest[x] = static_cast<int>(x);
            changed = true;
            break;
        }
    }
}

double sorted_value(const RVector& q, const RVector& a, const std::vector<int>& dest)
{
    double v = 0.0;
    for (std::size_t i = 0; i < dest.size(); ++i)
        v += q(static_cast<Eigen::Index>(i)) * a(dest[i]);
    return v;
}

Matrix permutation_in_basis(const std::vector<int>& dest, const Matrix& from, const Matrix& to)
{
    return to * permutation_unitary(dest) * from.adjoint();
}

} // namespace

int transposition_count(const std::vector<int>& permutation)
{
    std::vector<bool> seen(permutation.size(), false);
    int cycles = 0;
    for (std::size_t i = 0; i < permutation.size(); ++i) {
        if (seen[i])
            continue;
        ++cycles;
        for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(permutation[j]))
            seen[j] = true;
    }
    return static_cast<int>(permutation.size()) - cycles;
}

double exhaustive_min_value(const RVector& populations, const RVector& values, long long max_arrangements)
{
    if (populations.size() != values.size())
        throw ValidationError("exhaustive_min_value: length mismatch");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double best = kInf;
    long long count = 0;
    do {
        if (++count > max_arrangements)
            throw ResourceError("exhaustive_min_value: too many arrangements");
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += populations(static_cast<Eigen::Index>(i)) * v[i];
        best = std::min(best, s);
    } while (std::next_permutation(v.begin(), v.end()));
    return best;
}

SortingProtocol optimal_protocol(const DensityMatrix& rho0, const HermitianOperator& a, bool partial)
{
    if (rho0.dim() != a.dim())
        throw ValidationError("optimal_protocol: dimension mismatch");
    const HermitianOperator rho_op = HermitianOperator::trusted(rho0.matrix());
    const double scale = (max_abs(a.matrix()) + 1.0) * (max_abs(rho0.matrix()) + 1.0);
    const bool commuting = commutator_norm(rho0.matrix(), a.matrix()) <= 1e-10 * scale;
    if (partial && !commuting)
        throw ValidationError("optimal_protocol: partial sorting requires rho0 to commute with A");

    SortingProtocol sp;
    sp.partial = partial;
    RVector q, av;
    Matrix from, to;
    if (commuting) {
        const CommonBasis cb = common_eigenbasis(a, rho_op);
        av = cb.first;
        q = cb.second;
        from = to = cb.basis;
    } else {
        const Spectrum sr = eig_sorted(rho_op);
        const Spectrum sa = eig_sorted(a);
        q = sr.values;
        av = sa.values;
        from = sr.vectors;
        to = sa.vectors;
    }
    sp.permutation = sorting_permutation(q, av);
    if (partial) {
        const double tol = relative_tol(av);
        std::vector<int> order(static_cast<std::size_t>(av.size()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return av(i) < av(j); });
        std::vector<int> block(order.size(), 0);
        int current = 0;
        for (std::size_t k = 1; k < order.size(); ++k) {
            if (av(order[k]) - av(order[k - 1]) >= tol)
                ++current;
            block[static_cast<std::size_t>(order[k])] = current;
        }
        short_circuit(sp.permutation, block);
    }
    sp.achieved_value = sorted_value(q, av, sp.permutation);
    sp.transpositions = transposition_count(sp.permutation);
    sp.basis = from;
    sp.unitary = permutation_in_basis(sp.permutation, from, to);
    return sp;
}

DemonChannel::DemonChannel(std::vector<Matrix> projectors, std::vector<Matrix> feedbacks, double p)
    : projectors_(std::move(projectors)), feedbacks_(std::move(feedbacks)), p_(p)
{
    if (!(p_ >= 0.0 && p_ <= 1.0))
        throw ValidationError("DemonChannel: activation probability outside [0, 1]");
    if (projectors_.empty() || projectors_.size() != feedbacks_.size())
        throw ValidationError("DemonChannel: one feedback unitary per projector is required");
    const auto n = projectors_.front().rows();
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < projectors_.size(); ++k) {
        if (projectors_[k].rows() != n || feedbacks_[k].rows() != n)
            throw ValidationError("DemonChannel: dimension mismatch");
        if (!is_unitary(feedbacks_[k]))
            throw ValidationError("DemonChannel: feedback " + std::to_string(k) + " is not unitary");
        for (std::size_t j = 0; j < projectors_.size(); ++j) {
            const Matrix prod = projectors_[k] * projectors_[j];
            const Matrix expected = k == j ? projectors_[k] : Matrix::Zero(n, n);
            if (max_abs(prod - expected) > 1e-10)
                throw ValidationError("DemonChannel: projectors are not orthogonal");
        }
        sum += projectors_[k];
    }
    if (max_abs(sum - Matrix::Identity(n, n)) > 1e-10)
        throw ValidationError("DemonChannel: projectors do not resolve the identity");
}

DemonChannel DemonChannel::from_replacements(int dim, const std::vector<std::pair<int, int>>& replacements, double p)
{
    std::vector<Matrix> proj, fb;
    Matrix rest = Matrix::Identity(dim, dim);
    std::vector<bool> used(static_cast<std::size_t>(dim), false);
    for (const auto& [from, to] : replacements) {
        if (from < 0 || from >= dim || to < 0 || to >= dim)
            throw ValidationError("DemonChannel: replacement index out of range");
        if (used[static_cast<std::size_t>(from)])
            throw ValidationError("DemonChannel: basis state " + std::to_string(from) + " measured twice");
        used[static_cast<std::size_t>(from)] = true;
        Matrix pr = Matrix::Zero(dim, dim);
        pr(from, from) = 1.0;
        std::vector<int> dest(static_cast<std::size_t>(dim));
        std::iota(dest.begin(), dest.end(), 0);
        std::swap(dest[static_cast<std::size_t>(from)], dest[static_cast<std::size_t>(to)]);
        proj.push_back(pr);
        fb.push_back(permutation_unitary(dest));
        rest -= pr;
    }
    if (max_abs(rest) > 0.0) {
        proj.push_back(rest);
        fb.push_back(Matrix::Identity(dim, dim));
    }
    return DemonChannel(std::move(proj), std::move(fb), p);
}

DemonChannel DemonChannel::with_p(double p) const
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("DemonChannel: activation probability outside [0, 1]");
    DemonChannel out = *this;
    out.p_ = p;
    return out;
}

int DemonChannel::dim() const
{
    return projectors_.empty() ? 0 : static_cast<int>(projectors_.front().rows());
}

DensityMatrix demon_evolve(const DensityMatrix& rho, const DemonChannel& channel)
{
    if (rho.dim() != channel.dim())
        throw ValidationError("demon_evolve: dimension mismatch");
    Matrix fed = Matrix::Zero(rho.dim(), rho.dim());
    for (std::size_t k = 0; k < channel.projectors().size(); ++k) {
        const Matrix& pk = channel.projectors()[k];
        const Matrix& uk = channel.feedbacks()[k];
        fed += uk * pk * rho.matrix() * pk * uk.adjoint();
    }
    return DensityMatrix::trusted(channel.p() * fed + (1.0 - channel.p()) * rho.matrix());
}

InequalityEvaluator ci_evaluator(const DensityMatrix& rho0)
{
    const HermitianOperator b = neg_log_state(rho0, ZeroPopulationPolicy::Clamp).op;
    return {"CI", [b](const DensityMatrix& r0, const DensityMatrix& rf) {
                return expectation(rf, b) - expectation(r0, b);
            }};
}

InequalityEvaluator gp_evaluator(const DensityMatrix& rho0, double alpha)
{
    const HermitianOperator g = gp_family(rho0, alpha, ZeroPopulationPolicy::Clamp);
    std::ostringstream name;
    name << "gp(alpha=" << alpha << ")";
    return {name.str(), [g](const DensityMatrix& r0, const DensityMatrix& rf) {
                return expectation(rf, g) - expectation(r0, g);
            }};
}

InequalityEvaluator inequality_evaluator(std::string name, const LinearInequality& q)
{
    return {std::move(name), [q](const DensityMatrix& r0, const DensityMatrix& rf) { return q.slack(r0, rf); }};
}

InequalityEvaluator deformation_evaluator(const DeformationBound& bound)
{
    return inequality_evaluator("deformation(" + bound.provenance + ")", bound.inequality);
}

InequalityEvaluator deformation_pair_evaluator(const XiThresholds& thresholds)
{
    const DeformationBound inc = bound_from_xi(thresholds, BoundSense::Increase);
    const DeformationBound dec = bound_from_xi(thresholds, BoundSense::Decrease);
    return {"deformation(xi_minus, xi_plus)", [inc, dec](const DensityMatrix& r0, const DensityMatrix& rf) {
                return std::min(inc.slack(r0, rf), dec.slack(r0, rf));
            }};
}

InequalityEvaluator truncated_evaluator()
{
    return {"truncated", [](const DensityMatrix& r0, const DensityMatrix& rf) {
                const HierarchyReport h = hierarchy_audit(r0, rf);
                return *std::min_element(h.truncated_slack.begin(), h.truncated_slack.end());
            }};
}

InequalityEvaluator binary_evaluator()
{
    return {"binary", [](const DensityMatrix& r0, const DensityMatrix& rf) {
                const HierarchyReport h = hierarchy_audit(r0, rf);
                return *std::min_element(h.binary_slack.begin(), h.binary_slack.end());
            }};
}

InequalityEvaluator majorization_evaluator()
{
    return {"majorization", [](const DensityMatrix& r0, const DensityMatrix& rf) {
                const RVector p0 = r0.eigenvalues().cwiseMax(0.0);
                const RVector pf = rf.eigenvalues().cwiseMax(0.0);
                return majorization_check(p0 / p0.sum(), pf / pf.sum()).min_margin();
            }};
}

double detection_threshold(const DensityMatrix& rho0, const MixtureOfUnitaries& pre_evolution,
                           const DemonChannel& demon, const InequalityEvaluator& inequality,
                           const ThresholdOptions& options)
{
    const DensityMatrix pre = evolve(rho0, pre_evolution);
    auto violated = [&](double p) {
        return inequality.slack(rho0, demon_evolve(pre, demon.with_p(p))) < -options.margin;
    };
    const int steps = static_cast<int>(std::ceil(1.0 / options.grid_step - 1e-9));
    double prev = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double p = std::min(1.0, k * options.grid_step);
        if (violated(p)) {
            if (k == 0)
                return 0.0;
            double lo = prev, hi = p;
            while (hi - lo > options.resolution) {
                const double mid = 0.5 * (lo + hi);
                (violated(mid) ? hi : lo) = mid;
            }
            return hi;
        }
        prev = p;
    }
    return kInf;
}

CIGapDecomposition ci_gap_decomposition(const DensityMatrix& rho0_sys, const HermitianOperator& h_env, double beta,
                                        const Matrix& u)
{
    const int ds = rho0_sys.dim();
    const int de = h_env.dim();
    if (u.rows() != ds * de || u.cols() != ds * de)
        throw ValidationError("ci_gap_decomposition: unitary has the wrong dimension");
    if (!is_unitary(u))
        throw ValidationError("ci_gap_decomposition: matrix is not unitary");
    const DensityMatrix tau = thermal_state(h_env, beta);
    const std::vector<int> dims{ds, de};
    const DensityMatrix rho0 = DensityMatrix::trusted(kron(rho0_sys.matrix(), tau.matrix()));
    const DensityMatrix rhof = conjugate(rho0, u);
    const DensityMatrix fs = partial_trace(rhof, dims, {0});
    const DensityMatrix fe = partial_trace(rhof, dims, {1});

    CIGapDecomposition g;
    g.dS_sys = entropy(fs) - entropy(rho0_sys);
    g.beta_dE_env = beta * (expectation(fe, h_env) - expectation(tau, h_env));
    g.D_correlation = mutual_information(rhof, dims, {0});
    try {
        g.D_env_displacement = relative_entropy(fe, tau);
    } catch (const DomainError&) {
        g.D_env_displacement = kInf;
        g.infinite_term = true;
    }
    return g;
}

} // namespace pdeform
