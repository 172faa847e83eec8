#include "pdeform/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pdeform/passivity.hpp"

namespace pdeform {

namespace {

std::string fmt_double(double x)
{
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

struct TwoBody {
    int cold = 0;
    int hot = 1;
    double beta_c = 0.0;
    double beta_h = 0.0;
    std::vector<double> ec;
    std::vector<double> eh;
};

TwoBody two_thermal(const SetupSpec& setup)
{
    validate_setup(setup);
    if (setup.subsystems.size() != 2 || setup.correlations)
        throw ValidationError("expected exactly two uncorrelated subsystems");
    TwoBody t;
    const double b0 = thermal_beta(setup, 0);
    const double b1 = thermal_beta(setup, 1);
    t.cold = b0 >= b1 ? 0 : 1;
    t.hot = 1 - t.cold;
    t.beta_c = std::max(b0, b1);
    t.beta_h = std::min(b0, b1);
    t.ec = setup.subsystems[static_cast<std::size_t>(t.cold)].energy_levels;
    t.eh = setup.subsystems[static_cast<std::size_t>(t.hot)].energy_levels;
    return t;
}

bool passive_populations(const std::vector<double>& energies, const RVector& p, double tol = 1e-12)
{
    const double etol = 1e-12 * (spectral_span(energies) + 1.0);
    for (std::size_t a = 0; a < energies.size(); ++a)
        for (std::size_t b = 0; b < energies.size(); ++b)
            if (energies[a] < energies[b] - etol && p(static_cast<Eigen::Index>(a)) < p(static_cast<Eigen::Index>(b)) - tol)
                return false;
    return true;
}

Eigen::MatrixXd joint_table(const SetupSpec& setup)
{
    if (setup.subsystems.size() != 2)
        throw ValidationError("expected exactly two subsystems");
    const DensityMatrix rho = initial_state(setup);
    if (!rho.is_diagonal(1e-14))
        throw ValidationError("initial state is not diagonal in the product energy basis");
    const int d0 = setup.subsystems[0].dim();
    const int d1 = setup.subsystems[1].dim();
    const RVector p = rho.populations();
    Eigen::MatrixXd t(d0, d1);
    for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d1; ++j)
            t(i, j) = p(i * d1 + j);
    return t;
}

} // namespace

double min_gap(const std::vector<double>& levels, double tol)
{
    std::vector<double> s = levels;
    std::sort(s.begin(), s.end());
    double g = kInf;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double d = s[i] - s[i - 1];
        if (d > tol)
            g = std::min(g, d);
    }
    return std::isfinite(g) ? g : 0.0;
}

double spectral_span(const std::vector<double>& levels)
{
    if (levels.empty())
        return 0.0;
    const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
    return *hi - *lo;
}

double LinearInequality::lhs(const DensityMatrix& rho0, const DensityMatrix& rhof) const
{
    double s = 0.0;
    for (const auto& [c, op] : terms)
        s += c * (expectation(rhof, op) - expectation(rho0, op));
    return s;
}

LinearInequality deformed_inequality(const HermitianOperator& b, const HermitianOperator& a, double xi)
{
    LinearInequality q;
    q.terms = {{1.0, b}, {xi, a}};
    q.text = "Delta<B> + (" + fmt_double(xi) + ") Delta<A> >= 0";
    return q;
}

XiThresholds xi_thresholds(const HermitianOperator& b, const HermitianOperator& a,
                           const std::optional<ManifoldPartition>& partition,
                           const std::optional<HermitianOperator>& reference)
{
    XiThresholds out;
    out.base = b;
    out.direction = a;
    out.basis = common_eigenbasis(b, a);
    const int n = b.dim();
    const RVector& t = out.basis.first;
    const RVector& av = out.basis.second;
    RVector r = t;
    if (reference) {
        if (!out.basis.computational || !reference->is_diagonal(0.0) || reference->dim() != n)
            throw ValidationError("xi_thresholds: a reference ordering requires diagonal operators");
        r = reference->diagonal_real();
    }
    std::vector<int> block(static_cast<std::size_t>(n), 0);
    if (partition) {
        if (!out.basis.computational)
            throw ValidationError("xi_thresholds: a partition requires operators diagonal in the global basis");
        block = partition->block_of(n);
        out.restricted = true;
        out.partition_used = partition;
    }
    const double tol_r = relative_tol(r);
    const double tol_a = relative_tol(av);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (block[static_cast<std::size_t>(i)] != block[static_cast<std::size_t>(j)])
                continue;
            int lo = i, hi = j;  // oriented so that r_hi > r_lo
            if (std::abs(r(hi) - r(lo)) < tol_r)
                continue;
            if (r(lo) > r(hi))
                std::swap(lo, hi);
            const double da = av(lo) - av(hi);
            if (std::abs(da) < tol_a)
                continue;
            const double xk = (t(hi) - t(lo)) / da;
            if (da > 0.0) {
                const double v = std::max(0.0, xk);
                out.xi_k_list.push_back({i, j, v});
                out.xi_plus = std::min(out.xi_plus, v);
            } else {
                const double v = std::min(0.0, xk);
                out.xi_k_list.push_back({i, j, v});
                out.xi_minus = std::max(out.xi_minus, v);
            }
        }
    }
    return out;
}

DeformationBound bound_from_xi(const XiThresholds& t, BoundSense sense)
{
    DeformationBound d;
    d.base = t.base;
    d.direction = t.direction;
    d.sense = sense;
    const std::string tag = t.restricted ? "restricted " : "";
    if (sense == BoundSense::Increase) {
        d.xi_used = t.xi_minus;
        d.provenance = tag + "xi_minus";
        if (!std::isfinite(t.xi_minus)) {
            d.sign_definite = true;
            d.inequality.terms = {{-1.0, t.direction}};
            d.inequality.text = "Delta<A> <= 0 (sign-definite)";
            return d;
        }
        if (t.xi_minus == 0.0)
            throw DomainError("bound_from_xi: xi_minus is zero");
        const double k = 1.0 / (-t.xi_minus);
        d.inequality.terms = {{k, t.base}, {-1.0, t.direction}};
        d.inequality.text = "Delta<A> <= " + fmt_double(k) + " Delta<B>";
    } else {
        d.xi_used = t.xi_plus;
        d.provenance = tag + "xi_plus";
        if (!std::isfinite(t.xi_plus)) {
            d.sign_definite = true;
            d.inequality.terms = {{1.0, t.direction}};
            d.inequality.text = "Delta<A> >= 0 (sign-definite)";
            return d;
        }
        if (t.xi_plus == 0.0)
            throw DomainError("bound_from_xi: xi_plus is zero");
        const double k = 1.0 / t.xi_plus;
        d.inequality.terms = {{k, t.base}, {1.0, t.direction}};
        d.inequality.text = "-Delta<A> <= " + fmt_double(k) + " Delta<B>";
    }
    return d;
}

DeformationCheck validate_deformation(const HermitianOperator& b, const HermitianOperator& btilde,
                                      const DensityMatrix& rho0, const std::vector<std::pair<int, int>>& allowed)
{
    if (b.dim() != btilde.dim() || b.dim() != rho0.dim())
        throw ValidationError("validate_deformation: dimension mismatch");
    const auto scale = [&](const Matrix& m) { return (m.cwiseAbs().maxCoeff() + 1.0) * 2.0; };
    if (commutator_norm(b.matrix(), rho0.matrix()) > 1e-9 * scale(b.matrix()) ||
        commutator_norm(btilde.matrix(), rho0.matrix()) > 1e-9 * scale(btilde.matrix()))
        throw ValidationError("validate_deformation: operators must commute with the initial state");
    const CommonBasis cb = common_eigenbasis(b, btilde);
    const RVector& x = cb.first;
    const RVector& y = cb.second;
    const double tx = relative_tol(x);
    const double ty = relative_tol(y);
    auto is_allowed = [&](int i, int j) {
        for (const auto& [p, q] : allowed)
            if ((p == i && q == j) || (p == j && q == i))
                return true;
        return false;
    };
    DeformationCheck res;
    const int n = b.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = x(j) - x(i);
            const double dy = y(j) - y(i);
            const bool inverted = (dx > tx && dy < -ty) || (dx < -tx && dy > ty);
            if (inverted && !is_allowed(i, j)) {
                res.ok = false;
                if (res.witnesses.size() < 1000)
                    res.witnesses.emplace_back(i, j);
            }
        }
    return res;
}

BspGroups bsp_subspaces(const HermitianOperator& b, const HermitianOperator& a, double xi_critical,
                        const std::optional<ManifoldPartition>& partition)
{
    const CommonBasis cb = common_eigenbasis(b, a);
    const int n = b.dim();
    std::vector<int> block(static_cast<std::size_t>(n), 0);
    if (partition) {
        if (!cb.computational)
            throw ValidationError("bsp_subspaces: a partition requires operators diagonal in the global basis");
        block = partition->block_of(n);
    }
    RVector c = cb.first + xi_critical * cb.second;
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int p, int q) { return c(p) < c(q); });
    const double tc = relative_tol(c);
    const double tb = relative_tol(cb.first);

    BspGroups out;
    out.basis = cb.basis;
    std::vector<int> run;
    auto flush = [&]() {
        std::map<int, std::vector<int>> by_block;
        for (int i : run)
            by_block[block[static_cast<std::size_t>(i)]].push_back(i);
        for (auto& [blk, members] : by_block) {
            if (members.size() < 2)
                continue;
            double lo = kInf, hi = -kInf;
            for (int i : members) {
                lo = std::min(lo, cb.first(i));
                hi = std::max(hi, cb.first(i));
            }
            if (hi - lo > tb) {
                std::sort(members.begin(), members.end());
                out.groups.push_back(members);
            }
        }
        run.clear();
    };
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (!run.empty() && c(idx[k]) - c(run.back()) >= tc)
            flush();
        run.push_back(idx[k]);
    }
    flush();
    std::sort(out.groups.begin(), out.groups.end());
    out.empty = out.groups.empty();
    return out;
}

BspVerification verify_bsp_equality(const HermitianOperator& b, const HermitianOperator& a, double xi,
                                    const BspGroups& groups, const DensityMatrix& rho0, int trials, Rng& rng)
{
    BspVerification v;
    const int n = b.dim();
    std::uniform_int_distribution<int> nterms(1, 3);
    for (int k = 0; k < trials; ++k) {
        const MixtureOfUnitaries local = random_block_mixture(n, groups.groups, nterms(rng), rng);
        std::vector<UnitaryTerm> terms;
        for (const auto& t : local.terms())
            terms.push_back({t.weight, groups.basis * t.unitary * groups.basis.adjoint()});
        const DensityMatrix rf = evolve(rho0, MixtureOfUnitaries(std::move(terms)));
        const double da = expectation(rf, a) - expectation(rho0, a);
        const double db = expectation(rf, b) - expectation(rho0, b);
        v.max_residual = std::max(v.max_residual, std::abs(db + xi * da));
        v.min_delta_a = std::min(v.min_delta_a, da);
        v.max_delta_a = std::max(v.max_delta_a, da);
        v.min_delta_b = std::min(v.min_delta_b, db);
        v.max_delta_b = std::max(v.max_delta_b, db);
        ++v.trials;
    }
    v.holds = v.max_residual < 1e-9;
    return v;
}

std::vector<std::vector<double>> LaddersDiagram::reassemble() const
{
    std::vector<std::vector<double>> out(floors.size());
    for (std::size_t k = 0; k < floors.size(); ++k) {
        auto& row = out[static_cast<std::size_t>(floors[k].index)];
        for (double rung : ladders[k])
            row.push_back(floors[k].value + rung);
    }
    return out;
}

LaddersDiagram ladders_diagram(const Eigen::MatrixXd& joint, LadderSource source)
{
    const auto nf = joint.rows();
    const auto nl = joint.cols();
    if (nf < 1 || nl < 1)
        throw ValidationError("ladders_diagram: empty population table");
    LaddersDiagram d;
    d.source = source;
    std::vector<Floor> floors;
    std::vector<std::vector<double>> ladders;
    for (Eigen::Index i = 0; i < nf; ++i) {
        const double pi = joint.row(i).sum();
        if (!(pi > 0.0))
            throw DomainError("ladders_diagram: floor level " + std::to_string(i) + " has zero marginal population");
        floors.push_back({-std::log(pi), static_cast<int>(i)});
        std::vector<double> rungs;
        for (Eigen::Index j = 0; j < nl; ++j) {
            if (!(joint(i, j) > 0.0))
                throw DomainError("ladders_diagram: zero joint population");
            rungs.push_back(-std::log(joint(i, j) / pi));
        }
        ladders.push_back(std::move(rungs));
    }
    std::vector<int> order(static_cast<std::size_t>(nf));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return floors[static_cast<std::size_t>(x)].value < floors[static_cast<std::size_t>(y)].value; });
    double scale = 0.0;
    for (int k : order) {
        d.floors.push_back(floors[static_cast<std::size_t>(k)]);
        d.ladders.push_back(ladders[static_cast<std::size_t>(k)]);
        for (double r : ladders[static_cast<std::size_t>(k)])
            scale = std::max(scale, std::abs(floors[static_cast<std::size_t>(k)].value + r));
    }
    const double tol = 1e-9 * (scale + 1.0);
    for (std::size_t k = 0; k + 1 < d.floors.size(); ++k) {
        const double top = d.floors[k].value + *std::max_element(d.ladders[k].begin(), d.ladders[k].end());
        const double bottom =
            d.floors[k + 1].value + *std::min_element(d.ladders[k + 1].begin(), d.ladders[k + 1].end());
        if (!(top < bottom - tol))
            d.overlap = true;
    }
    return d;
}

LaddersDiagram ladders_diagram(const SetupSpec& setup, int floor_subsystem)
{
    validate_setup(setup);
    if (floor_subsystem != 0 && floor_subsystem != 1)
        throw ValidationError("ladders_diagram: floor subsystem must be 0 or 1");
    Eigen::MatrixXd t = joint_table(setup);
    if (floor_subsystem == 1)
        t.transposeInPlace();
    LadderSource src = LadderSource::ProductThermal;
    if (setup.correlations)
        src = LadderSource::ClassicallyCorrelated;
    else
        for (const auto& s : setup.subsystems)
            if (s.init != SubsystemSpec::Init::Thermal)
                src = LadderSource::ProductPassive;
    return ladders_diagram(t, src);
}

UltraColdReport ultracold_analysis(const SetupSpec& setup)
{
    const TwoBody tb = two_thermal(setup);
    UltraColdReport r;
    r.cold = tb.cold;
    r.hot = tb.hot;
    r.beta_c = tb.beta_c;
    r.beta_h = tb.beta_h;
    r.omega_c_min = min_gap(tb.ec);
    if (r.omega_c_min <= 0.0)
        throw DomainError("ultracold_analysis: cold spectrum has no nonzero gap");
    r.omega_h_max = spectral_span(tb.eh);
    r.beta_c_star = tb.beta_h * r.omega_h_max / r.omega_c_min;
    r.limiting_case = tb.beta_h == 0.0 || r.omega_h_max == 0.0;
    r.no_cooling = tb.beta_c >= r.beta_c_star * (1.0 - 1e-12);
    r.otto_efficiency_bound = r.omega_h_max > 0.0 ? 1.0 - r.omega_c_min / r.omega_h_max : 0.0;
    if (r.no_cooling) {
        LinearInequality q;
        const HermitianOperator hc = local_hamiltonian(setup, tb.cold);
        const HermitianOperator hh = local_hamiltonian(setup, tb.hot);
        if (r.omega_h_max > 0.0) {
            q.terms = {{1.0 / r.omega_c_min, hc}, {1.0 / r.omega_h_max, hh}};
            q.text = "(1/omega_c_min) Delta<H_c> + (1/omega_h_max) Delta<H_h> >= 0";
        } else {
            q.terms = {{1.0, hc}};
            q.text = "Delta<H_c> >= 0";
        }
        r.effective_inequality = q;
    }
    return r;
}

std::vector<int> ultracold_saturating_swap(const SetupSpec& setup)
{
    const TwoBody tb = two_thermal(setup);
    const double wc = min_gap(tb.ec);
    if (wc <= 0.0)
        throw DomainError("ultracold_saturating_swap: cold spectrum has no nonzero gap");
    int c_lo = -1, c_hi = -1;
    double best = kInf;
    for (std::size_t a = 0; a < tb.ec.size(); ++a)
        for (std::size_t b = 0; b < tb.ec.size(); ++b) {
            const double d = tb.ec[b] - tb.ec[a];
            if (d > 1e-12 && d < best - 1e-12) {
                best = d;
                c_lo = static_cast<int>(a);
                c_hi = static_cast<int>(b);
            }
        }
    const int h_top = static_cast<int>(std::max_element(tb.eh.begin(), tb.eh.end()) - tb.eh.begin());
    const int h_bot = static_cast<int>(std::min_element(tb.eh.begin(), tb.eh.end()) - tb.eh.begin());
    std::vector<int> first(2), second(2);
    first[static_cast<std::size_t>(tb.cold)] = c_lo;
    first[static_cast<std::size_t>(tb.hot)] = h_top;
    second[static_cast<std::size_t>(tb.cold)] = c_hi;
    second[static_cast<std::size_t>(tb.hot)] = h_bot;
    const int n = total_dim(setup);
    std::vector<int> dest(static_cast<std::size_t>(n));
    std::iota(dest.begin(), dest.end(), 0);
    const int x = flat_index(setup, first);
    const int y = flat_index(setup, second);
    std::swap(dest[static_cast<std::size_t>(x)], dest[static_cast<std::size_t>(y)]);
    return dest;
}

double PolarizationBound::slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const
{
    double s = kInf;
    for (const auto& b : branches)
        s = std::min(s, b.slack(rho0, rhof));
    return s;
}

std::optional<double> PolarizationBound::starred_slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const
{
    if (starred_branches.empty())
        return std::nullopt;
    double s = kInf;
    for (const auto& b : starred_branches)
        s = std::min(s, b.slack(rho0, rhof));
    return s;
}

PolarizationBound polarization_bound(const SetupSpec& setup, int m)
{
    const TwoBody tb = two_thermal(setup);
    const int dh = static_cast<int>(tb.eh.size());
    if (m < 0 || m + 1 >= dh)
        throw ValidationError("polarization_bound: level pair out of range");
    const double etol = 1e-12 * (spectral_span(tb.eh) + 1.0);
    if (std::abs(tb.eh[static_cast<std::size_t>(m)] - tb.eh[static_cast<std::size_t>(m + 1)]) > etol)
        throw ValidationError("polarization_bound: levels m and m+1 are not degenerate");
    PolarizationBound pb;
    pb.m = m;
    pb.E = tb.eh[static_cast<std::size_t>(m)];
    for (double e : tb.eh) {
        if (e > pb.E + etol)
            pb.E_plus = std::min(pb.E_plus, e);
        if (e < pb.E - etol)
            pb.E_minus = std::max(pb.E_minus, e);
    }
    pb.nu_formula = std::min(pb.E_plus - pb.E, pb.E - pb.E_minus);

    const HermitianOperator hc = local_hamiltonian(setup, tb.cold);
    const HermitianOperator hh = local_hamiltonian(setup, tb.hot);
    Matrix dloc = Matrix::Zero(dh, dh);
    dloc(m, m) = 1.0;
    dloc(m + 1, m + 1) = -1.0;
    const HermitianOperator d = local_operator(setup, tb.hot, dloc).with_label("P_m - P_m+1");
    const HermitianOperator b = hc * tb.beta_c + hh * tb.beta_h;

    const double wc = min_gap(tb.ec);
    const double wh = spectral_span(tb.eh);
    pb.overlap = !(tb.beta_c * wc > tb.beta_h * wh + 1e-12 * (tb.beta_c * wc + 1.0));
    pb.formula_applies = !pb.overlap && std::isfinite(pb.E_plus) && std::isfinite(pb.E_minus);

    const XiThresholds t = xi_thresholds(b, d * tb.beta_h);
    pb.nu_plus = std::min(t.xi_plus, -t.xi_minus);
    pb.nu_minus = -pb.nu_plus;
    for (double s : {1.0, -1.0}) {
        LinearInequality q;
        q.terms = {{tb.beta_c, hc}, {tb.beta_h, hh}, {s * pb.nu_plus * tb.beta_h, d}};
        q.text = "beta_c Delta<H_c> + beta_h Delta<H_h> >= nu_plus beta_h |p_m+1 - p_m|";
        pb.branches.push_back(std::move(q));
    }
    if (wc > 0.0 && wh > 0.0) {
        const double beta_star = tb.beta_h * wh / wc;
        if (tb.beta_c >= beta_star * (1.0 - 1e-12)) {
            const HermitianOperator bstar = hc * beta_star + hh * tb.beta_h;
            const XiThresholds ts = xi_thresholds(bstar, d * tb.beta_h, std::nullopt, b);
            pb.nu_starred = std::min(ts.xi_plus, -ts.xi_minus);
            for (double s : {1.0, -1.0}) {
                LinearInequality q;
                q.terms = {{wh / wc, hc}, {1.0, hh}, {s * pb.nu_starred, d}};
                q.text = "(omega_h_max/omega_c_min) Delta<H_c> + Delta<H_h> >= nu_plus |p_m+1 - p_m|";
                pb.starred_branches.push_back(std::move(q));
            }
        }
    }
    return pb;
}

EffectiveBetaReport effective_betas(const SetupSpec& setup)
{
    validate_setup(setup);
    EffectiveBetaReport rep;
    if (setup.subsystems.size() != 2) {
        rep.reasons.push_back("effective betas need exactly two subsystems");
        return rep;
    }
    const auto& s0 = setup.subsystems[0];
    const auto& s1 = setup.subsystems[1];
    auto is_thermal = [](const SubsystemSpec& s) {
        return s.init == SubsystemSpec::Init::Thermal && !s.init_generator;
    };
    const DensityMatrix rho0 = initial_state(setup);
    if (!rho0.is_diagonal(1e-14)) {
        rep.reasons.push_back("initial state is not diagonal in the energy basis");
        return rep;
    }

    auto finish = [&](const HermitianOperator& deformed) {
        rep.deformed = deformed;
        const BuildBResult b = build_B(setup, ZeroPopulationPolicy::Clamp);
        const DeformationCheck chk = validate_deformation(b.full, deformed, rho0);
        if (!chk.ok)
            rep.reasons.push_back("deformed operator inverts the ordering of B");
        rep.construction_trace.push_back(chk.ok ? "validate_deformation against B: ok"
                                                : "validate_deformation against B: failed");
        rep.validity = rep.reasons.empty();
    };

    if (!setup.correlations && (is_thermal(s0) != is_thermal(s1))) {
        rep.mode = "athermal";
        const int c = is_thermal(s0) ? 0 : 1;
        const int s = 1 - c;
        const auto& cs = setup.subsystems[static_cast<std::size_t>(c)];
        const auto& ss = setup.subsystems[static_cast<std::size_t>(s)];
        const RVector p = local_initial_populations(ss);
        if (!passive_populations(ss.energy_levels, p))
            rep.reasons.push_back("populations of '" + ss.label + "' are not passive with respect to its energy");
        const double wc = min_gap(cs.energy_levels);
        const double ws = spectral_span(ss.energy_levels);
        if (wc <= 0.0)
            rep.reasons.push_back("cold subsystem '" + cs.label + "' has no nonzero gap");
        if (ws <= 0.0)
            rep.reasons.push_back("athermal subsystem '" + ss.label + "' has a trivial spectrum");
        if (p.minCoeff() <= 0.0)
            rep.reasons.push_back("athermal subsystem '" + ss.label + "' has a zero population");
        if (!rep.reasons.empty())
            return rep;
        const double bar_star = std::log(p.maxCoeff() / p.minCoeff()) / wc;
        rep.construction_trace.push_back("no-overlap threshold beta_c_bar* = ln(p1/pN)/omega_c_min = " +
                                         fmt_double(bar_star));
        if (cs.beta < bar_star * (1.0 - 1e-12))
            rep.reasons.push_back("ladders overlap: beta_c = " + fmt_double(cs.beta) + " < " + fmt_double(bar_star));
        const double bs = cs.beta * wc / ws;
        rep.beta_eff[cs.label] = cs.beta;
        rep.beta_eff[ss.label] = bs;
        rep.construction_trace.push_back("ladder -ln p_i deformed into beta_s_eff H_s with beta_s_eff omega_s_max = "
                                         "beta_c omega_c_min: beta_s_eff = " + fmt_double(bs));
        const HermitianOperator hc = local_hamiltonian(setup, c);
        const HermitianOperator hs = local_hamiltonian(setup, s);
        LinearInequality q;
        q.terms = {{1.0 / wc, hc}, {1.0 / ws, hs}};
        q.text = "(1/omega_c_min) Delta<H_c> + (1/omega_s_max) Delta<H_s> >= 0";
        rep.inequality = q;
        finish(hc * cs.beta + hs * bs);
        return rep;
    }

    rep.mode = setup.correlations ? "correlated" : (is_thermal(s0) ? "product_thermal" : "two_athermal");
    const Eigen::MatrixXd t = joint_table(setup);
    const auto& ec = s0.energy_levels;
    const auto& eh = s1.energy_levels;
    const RVector pc = t.rowwise().sum();
    if (!passive_populations(ec, pc))
        rep.reasons.push_back("marginal of '" + s0.label + "' is not passive with respect to its energy");
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        if (!(pc(i) > 0.0)) {
            rep.reasons.push_back("floor level with zero marginal population");
            continue;
        }
        const RVector cond = t.row(i).transpose() / pc(i);
        if (!passive_populations(eh, cond)) {
            rep.reasons.push_back("conditional populations of '" + s1.label + "' on floor " + std::to_string(i) +
                                  " are not passive");
            break;
        }
    }
    std::vector<double> sorted_ec = ec;
    std::sort(sorted_ec.begin(), sorted_ec.end());
    for (std::size_t i = 1; i < sorted_ec.size(); ++i)
        if (sorted_ec[i] - sorted_ec[i - 1] <= 1e-12)
            rep.reasons.push_back("floor subsystem '" + s0.label + "' has degenerate levels");
    const double wc = min_gap(ec);
    const double wh = spectral_span(eh);
    if (wh <= 0.0)
        rep.reasons.push_back("ladder subsystem '" + s1.label + "' has a trivial spectrum");
    if (t.minCoeff() <= 0.0)
        rep.reasons.push_back("zero joint population");
    if (!rep.reasons.empty())
        return rep;
    const LaddersDiagram ld = ladders_diagram(t, setup.correlations ? LadderSource::ClassicallyCorrelated
                                                                    : LadderSource::ProductPassive);
    if (ld.overlap) {
        rep.reasons.push_back("ladders overlap");
        return rep;
    }
    // floors in ascending energy order
    std::vector<int> order(ec.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ec[static_cast<std::size_t>(a)] < ec[static_cast<std::size_t>(b)]; });
    auto ladder_of = [&](int level) -> const std::vector<double>& {
        for (std::size_t k = 0; k < ld.floors.size(); ++k)
            if (ld.floors[k].index == level)
                return ld.ladders[k];
        throw ConsistencyError("missing floor");
    };
    double bc = -kInf;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto& lo = ladder_of(order[k]);
        const auto& hi = ladder_of(order[k + 1]);
        const double top = *std::max_element(lo.begin(), lo.end());
        const double bottom = *std::min_element(hi.begin(), hi.end());
        const double gap = ec[static_cast<std::size_t>(order[k + 1])] - ec[static_cast<std::size_t>(order[k])];
        bc = std::max(bc, (top - bottom) / gap);
    }
    rep.construction_trace.push_back("floors shifted to beta_c_eff H_c with minimal beta_c_eff = " + fmt_double(bc));
    if (!(bc > 0.0)) {
        rep.reasons.push_back("minimal floor rescaling is not positive");
        return rep;
    }
    const double bh = bc * wc / wh;
    rep.construction_trace.push_back("ladders deformed into beta_h_eff H_h with beta_h_eff = beta_c_eff omega_c_min / "
                                     "omega_h_max = " + fmt_double(bh));
    rep.beta_eff[s0.label] = bc;
    rep.beta_eff[s1.label] = bh;
    const HermitianOperator hc = local_hamiltonian(setup, 0);
    const HermitianOperator hh = local_hamiltonian(setup, 1);
    LinearInequality q;
    q.terms = {{bc, hc}, {bh, hh}};
    q.text = "beta_c_eff Delta<H_c> + beta_h_eff Delta<H_h> >= 0";
    rep.inequality = q;
    finish(hc * bc + hh * bh);
    return rep;
}

} // namespace pdeform
