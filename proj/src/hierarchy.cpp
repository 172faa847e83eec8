#include "pdeform/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "pdeform/errors.hpp"

namespace pdeform {

namespace {

struct ClusterRange {
    double lo = 0.0;
    double hi = 0.0;
    int lo_index = 0;
    int hi_index = 0;
};

std::map<int, ClusterRange> cluster_ranges(const RVector& b, const std::vector<int>& cluster_of)
{
    std::map<int, ClusterRange> r;
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        const double v = b(static_cast<Eigen::Index>(i));
        const int idx = static_cast<int>(i);
        auto [it, inserted] = r.try_emplace(cluster_of[i], ClusterRange{v, v, idx, idx});
        if (!inserted) {
            if (v < it->second.lo) {
                it->second.lo = v;
                it->second.lo_index = idx;
            }
            if (v > it->second.hi) {
                it->second.hi = v;
                it->second.hi_index = idx;
            }
        }
    }
    return r;
}

void check_cluster_map(int dim, const std::vector<int>& cluster_of)
{
    if (static_cast<int>(cluster_of.size()) != dim)
        throw ValidationError("cluster map has " + std::to_string(cluster_of.size()) + " entries, expected " +
                              std::to_string(dim));
}

std::vector<int> descending_order(const RVector& values)
{
    std::vector<int> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return values(a) > values(b); });
    return idx;
}

TruncationSpec truncate(const HermitianOperator& b, int l, TruncationKind kind)
{
    const int n = b.dim();
    if (l < 1 || l > n)
        throw ValidationError("truncation level l = " + std::to_string(l) + " outside 1.." + std::to_string(n));
    const Spectrum s = eig_sorted(b);
    if (s.values.minCoeff() < -1e-9 * (s.values.cwiseAbs().maxCoeff() + 1.0))
        throw ValidationError("truncation requires a nonnegative operator");
    const std::vector<int> order = descending_order(s.values);
    TruncationSpec t;
    t.l = l;
    t.kind = kind;
    t.basis = s.vectors;
    t.kept.assign(order.begin(), order.begin() + l);
    RVector d = RVector::Zero(n);
    for (int k : t.kept)
        d(k) = kind == TruncationKind::Binary ? 1.0 : s.values(k);
    const Matrix m = s.vectors * d.cast<cplx>().asDiagonal() * s.vectors.adjoint();
    t.op = HermitianOperator::trusted((m + m.adjoint()) / 2.0,
                                      (kind == TruncationKind::Binary ? "B_bin^(" : "B^(") + std::to_string(l) + ")");
    return t;
}

RVector populations_in(const Matrix& basis, const DensityMatrix& rho)
{
    const Matrix m = basis.adjoint() * rho.matrix() * basis;
    return m.diagonal().real();
}

} // namespace

std::optional<std::pair<int, int>> cluster_overlap_witness(const HermitianOperator& b,
                                                           const std::vector<int>& cluster_of)
{
    check_cluster_map(b.dim(), cluster_of);
    if (!b.is_diagonal())
        throw ValidationError("coarse graining requires an operator diagonal in the cluster basis");
    const RVector v = b.diagonal_real();
    const auto ranges = cluster_ranges(v, cluster_of);
    std::vector<ClusterRange> sorted;
    for (const auto& [label, r] : ranges)
        sorted.push_back(r);
    std::sort(sorted.begin(), sorted.end(), [](const ClusterRange& x, const ClusterRange& y) {
        return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
    });
    const double tol = 1e-12 * (v.cwiseAbs().maxCoeff() + 1.0);
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k)
        for (std::size_t m = k + 1; m < sorted.size(); ++m)
            if (sorted[k].hi > sorted[m].lo + tol)
                return std::make_pair(sorted[k].hi_index, sorted[m].lo_index);
    return std::nullopt;
}

CoarseGrainResult coarse_grain(const HermitianOperator& b, const std::vector<int>& cluster_of, ClusterValue mode)
{
    if (const auto w = cluster_overlap_witness(b, cluster_of))
        throw ValidationError("clusters overlap: basis index " + std::to_string(w->first) + " (cluster " +
                              std::to_string(cluster_of[static_cast<std::size_t>(w->first)]) +
                              ") lies above basis index " + std::to_string(w->second) + " (cluster " +
                              std::to_string(cluster_of[static_cast<std::size_t>(w->second)]) + ")");
    const RVector v = b.diagonal_real();
    const auto ranges = cluster_ranges(v, cluster_of);
    CoarseGrainResult res;
    std::map<int, int> position;
    for (const auto& [label, r] : ranges) {
        position[label] = static_cast<int>(res.spec.labels.size());
        res.spec.labels.push_back(label);
        res.spec.sizes.push_back(0);
        res.spec.cluster_values.push_back(0.0);
    }
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        const int p = position[cluster_of[i]];
        res.spec.cluster_of.push_back(p);
        res.spec.sizes[static_cast<std::size_t>(p)] += 1;
        res.spec.cluster_values[static_cast<std::size_t>(p)] += v(static_cast<Eigen::Index>(i));
    }
    for (std::size_t p = 0; p < res.spec.labels.size(); ++p) {
        const ClusterRange& r = ranges.at(res.spec.labels[p]);
        double& q = res.spec.cluster_values[p];
        switch (mode) {
        case ClusterValue::Mean: q /= res.spec.sizes[p]; break;
        case ClusterValue::Min: q = r.lo; break;
        case ClusterValue::Max: q = r.hi; break;
        }
    }
    RVector d(b.dim());
    for (int i = 0; i < b.dim(); ++i)
        d(i) = res.spec.cluster_values[static_cast<std::size_t>(res.spec.cluster_of[static_cast<std::size_t>(i)])];
    res.op = HermitianOperator::diagonal(d, "B^CG");
    return res;
}

HermitianOperator coarse_probability_operator(const DensityMatrix& rho0, const std::vector<int>& cluster_of)
{
    check_cluster_map(rho0.dim(), cluster_of);
    if (!rho0.is_diagonal())
        throw ValidationError("coarse probabilities require a diagonal state");
    const RVector p = rho0.populations();
    std::map<int, double> total;
    for (std::size_t i = 0; i < cluster_of.size(); ++i)
        total[cluster_of[i]] += p(static_cast<Eigen::Index>(i));
    RVector d(rho0.dim());
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        const double t = total[cluster_of[i]];
        if (!(t > 0.0))
            throw DomainError("cluster " + std::to_string(cluster_of[i]) + " has zero population");
        d(static_cast<Eigen::Index>(i)) = -std::log(t);
    }
    return HermitianOperator::diagonal(d, "B'");
}

TruncationSpec truncated_operator(const HermitianOperator& b, int l)
{
    return truncate(b, l, TruncationKind::Truncated);
}

TruncationSpec binary_operator(const HermitianOperator& b, int l)
{
    return truncate(b, l, TruncationKind::Binary);
}

double MajorizationRecord::min_margin() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [s0, sf] : partial_sums)
        m = std::min(m, sf - s0);
    return m;
}

MajorizationRecord majorization_check(const RVector& p0, const RVector& pf, double tol)
{
    if (p0.size() != pf.size())
        throw ValidationError("majorization_check: length mismatch");
    if (p0.size() == 0)
        throw ValidationError("majorization_check: empty probability vectors");
    for (const RVector* p : {&p0, &pf}) {
        if (std::abs(p->sum() - 1.0) > 1e-9)
            throw ValidationError("majorization_check: probabilities sum to " + std::to_string(p->sum()));
        if (p->minCoeff() < -1e-12)
            throw ValidationError("majorization_check: negative probability");
    }
    MajorizationRecord r;
    r.p0_sorted_asc = p0;
    r.pf_sorted_asc = pf;
    std::sort(r.p0_sorted_asc.begin(), r.p0_sorted_asc.end());
    std::sort(r.pf_sorted_asc.begin(), r.pf_sorted_asc.end());
    double s0 = 0.0, sf = 0.0;
    for (Eigen::Index l = 0; l < p0.size(); ++l) {
        s0 += r.p0_sorted_asc(l);
        sf += r.pf_sorted_asc(l);
        const bool last = l + 1 == p0.size();
        const bool ok = last || s0 <= sf + tol;
        r.partial_sums.emplace_back(s0, sf);
        r.verdict_per_l.push_back(ok);
        r.passed = r.passed && ok;
    }
    return r;
}

std::string layer_name(Layer layer)
{
    switch (layer) {
    case Layer::None: return "none";
    case Layer::CI: return "CI";
    case Layer::Truncated: return "truncated";
    case Layer::Binary: return "binary";
    case Layer::Majorization: return "majorization";
    }
    return "unknown";
}

HierarchyReport hierarchy_audit(const DensityMatrix& rho0, const DensityMatrix& rhof, double tol)
{
    if (rho0.dim() != rhof.dim())
        throw ValidationError("hierarchy_audit: dimension mismatch");
    const int n = rho0.dim();
    const HermitianOperator b = neg_log_state(rho0, ZeroPopulationPolicy::Clamp).op;
    const Spectrum s = eig_sorted(b);
    const std::vector<int> order = descending_order(s.values);
    const RVector q0 = populations_in(s.vectors, rho0);
    const RVector qf = populations_in(s.vectors, rhof);

    HierarchyReport r;
    double trunc = 0.0, bin = 0.0;
    for (int l = 1; l <= n; ++l) {
        const int k = order[static_cast<std::size_t>(l - 1)];
        const double dq = qf(k) - q0(k);
        trunc += s.values(k) * dq;
        bin += dq;
        r.truncated_slack.push_back(trunc);
        r.binary_slack.push_back(bin);
    }
    r.ci_slack = r.truncated_slack.back();
    r.majorization = majorization_check(rho0.eigenvalues().cwiseMax(0.0) / rho0.eigenvalues().cwiseMax(0.0).sum(),
                                        rhof.eigenvalues().cwiseMax(0.0) / rhof.eigenvalues().cwiseMax(0.0).sum(),
                                        tol);

    r.ci_violated = r.ci_slack < -tol;
    r.truncated_violated =
        std::any_of(r.truncated_slack.begin(), r.truncated_slack.end(), [&](double x) { return x < -tol; });
    r.binary_violated = std::any_of(r.binary_slack.begin(), r.binary_slack.end(), [&](double x) { return x < -tol; });
    r.majorization_violated = !r.majorization.passed;

    if (r.ci_violated)
        r.first_violated = Layer::CI;
    else if (r.truncated_violated)
        r.first_violated = Layer::Truncated;
    else if (r.binary_violated)
        r.first_violated = Layer::Binary;
    else if (r.majorization_violated)
        r.first_violated = Layer::Majorization;

    const double min_binary = *std::min_element(r.binary_slack.begin(), r.binary_slack.end());
    r.implication_holds = (!r.ci_violated || r.truncated_violated) && (!r.truncated_violated || min_binary < 0.0) &&
                          (!r.binary_violated || r.majorization.min_margin() < 0.0);
    return r;
}

} // namespace pdeform
