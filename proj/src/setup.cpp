#include "pdeform/setup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace pdeform {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

double log_sum_exp_neg(const RVector& x)
{
    // ln sum exp(-x)
    const double m = x.minCoeff();
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        s += std::exp(-(x(i) - m));
    return -m + std::log(s);
}

RVector real_spectrum(const Matrix& m) { return eig_sorted(HermitianOperator(m)).values; }

void check_subsystem(const SetupSpec& spec, int k, const std::string& where)
{
    if (k < 0 || k >= static_cast<int>(spec.subsystems.size()))
        fail(where + ": subsystem index " + std::to_string(k) + " out of range");
}

void check_multi(const SetupSpec& spec, const std::vector<int>& multi, const std::string& where)
{
    if (multi.size() != spec.subsystems.size())
        fail(where + ": basis state must list one level per subsystem");
    for (std::size_t k = 0; k < multi.size(); ++k)
        if (multi[k] < 0 || multi[k] >= spec.subsystems[k].dim())
            fail(where + ": level index out of range for subsystem '" + spec.subsystems[k].label + "'");
}

Matrix ketbra(int dim, int ket, int bra)
{
    Matrix m = Matrix::Zero(dim, dim);
    m(ket, bra) = 1.0;
    return m;
}

} // namespace

void ManifoldPartition::validate(int dim) const
{
    std::vector<int> seen(static_cast<std::size_t>(dim), 0);
    for (const auto& b : blocks) {
        if (b.empty())
            fail("partition '" + description + "': empty block");
        for (int i : b) {
            if (i < 0 || i >= dim)
                fail("partition '" + description + "': index " + std::to_string(i) + " out of range");
            if (seen[static_cast<std::size_t>(i)]++)
                fail("partition '" + description + "': index " + std::to_string(i) + " appears twice");
        }
    }
    for (int i = 0; i < dim; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            fail("partition '" + description + "': index " + std::to_string(i) + " not covered");
}

std::vector<int> ManifoldPartition::block_of(int dim) const
{
    validate(dim);
    std::vector<int> out(static_cast<std::size_t>(dim));
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (int i : blocks[b])
            out[static_cast<std::size_t>(i)] = static_cast<int>(b);
    return out;
}

std::vector<int> subsystem_dims(const SetupSpec& spec)
{
    std::vector<int> d;
    for (const auto& s : spec.subsystems)
        d.push_back(s.dim());
    return d;
}

int total_dim(const SetupSpec& spec, std::size_t cap)
{
    std::size_t n = 1;
    for (const auto& s : spec.subsystems) {
        if (s.dim() < 1)
            fail("subsystem '" + s.label + "' has no energy levels");
        n *= static_cast<std::size_t>(s.dim());
        if (n > cap)
            throw ResourceError("setup dimension exceeds cap " + std::to_string(cap));
    }
    return static_cast<int>(n);
}

int subsystem_index(const SetupSpec& spec, const std::string& label)
{
    for (std::size_t k = 0; k < spec.subsystems.size(); ++k)
        if (spec.subsystems[k].label == label)
            return static_cast<int>(k);
    fail("unknown subsystem '" + label + "'");
}

int flat_index(const SetupSpec& spec, const std::vector<int>& multi)
{
    check_multi(spec, multi, "flat_index");
    int idx = 0;
    for (std::size_t k = 0; k < multi.size(); ++k)
        idx = idx * spec.subsystems[k].dim() + multi[k];
    return idx;
}

std::vector<int> multi_index(const SetupSpec& spec, int flat)
{
    std::vector<int> out(spec.subsystems.size());
    for (int k = static_cast<int>(spec.subsystems.size()) - 1; k >= 0; --k) {
        const int d = spec.subsystems[static_cast<std::size_t>(k)].dim();
        out[static_cast<std::size_t>(k)] = flat % d;
        flat /= d;
    }
    return out;
}

RVector local_initial_populations(const SubsystemSpec& s)
{
    if (s.init == SubsystemSpec::Init::PassivePopulations)
        return Eigen::Map<const RVector>(s.populations.data(), static_cast<Eigen::Index>(s.populations.size()));
    if (s.init_generator)
        return thermal_state(HermitianOperator(*s.init_generator), s.beta).populations();
    return thermal_state(HermitianOperator::diagonal(s.energy_levels), s.beta).populations();
}

void validate_setup(const SetupSpec& spec)
{
    if (spec.subsystems.empty())
        fail("setup has no subsystems");
    std::set<std::string> labels;
    for (const auto& s : spec.subsystems) {
        const std::string who = "subsystem '" + s.label + "'";
        if (s.label.empty())
            fail("subsystem without a label");
        if (!labels.insert(s.label).second)
            fail("duplicate subsystem label '" + s.label + "'");
        if (s.energy_levels.empty())
            fail(who + ": energy_levels is empty");
        for (double e : s.energy_levels)
            if (!std::isfinite(e))
                fail(who + ": energy levels must be finite");
        if (s.init == SubsystemSpec::Init::Thermal) {
            if (!std::isfinite(s.beta) || s.beta < 0.0)
                fail(who + ": beta must be finite and >= 0");
            if (s.init_generator) {
                if (s.init_generator->rows() != s.dim() || s.init_generator->cols() != s.dim())
                    fail(who + ": init generator dimension does not match energy levels");
                try {
                    HermitianOperator h(*s.init_generator);
                } catch (const ValidationError&) {
                    fail(who + ": init generator is not Hermitian");
                }
            }
        } else {
            if (static_cast<int>(s.populations.size()) != s.dim())
                fail(who + ": populations length does not match energy levels");
            double sum = 0.0;
            for (double p : s.populations) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    fail(who + ": populations must be finite and nonnegative");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                std::ostringstream os;
                os << who << ": populations sum to " << sum << ", expected 1";
                fail(os.str());
            }
        }
    }
    const int n = total_dim(spec);
    if (spec.correlations) {
        const auto& c = *spec.correlations;
        if (static_cast<int>(c.size()) != n)
            fail("correlations: table size " + std::to_string(c.size()) + " does not match setup dimension " +
                 std::to_string(n));
        double sum = 0.0;
        for (double p : c) {
            if (!(p >= 0.0) || !std::isfinite(p))
                fail("correlations: entries must be finite and nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "correlations: table sums to " << sum << ", expected 1";
            fail(os.str());
        }
    }
    std::set<std::string> inames;
    for (const auto& it : spec.interactions) {
        const std::string who = "interaction '" + it.name + "'";
        if (!inames.insert(it.name).second)
            fail("duplicate interaction name '" + it.name + "'");
        if (!std::isfinite(it.strength))
            fail(who + ": strength must be finite");
        switch (it.kind) {
        case InteractionSpec::Kind::Transitions:
            if (it.terms.empty())
                fail(who + ": no terms");
            for (const auto& term : it.terms)
                for (const auto& f : term) {
                    check_subsystem(spec, f.subsystem, who);
                    const int d = spec.subsystems[static_cast<std::size_t>(f.subsystem)].dim();
                    if (f.ket < 0 || f.ket >= d || f.bra < 0 || f.bra >= d)
                        fail(who + ": transition level out of range");
                }
            break;
        case InteractionSpec::Kind::FlipFlop:
            if (it.spins.size() < 2)
                fail(who + ": flip-flop needs at least two spins");
            for (int k : it.spins) {
                check_subsystem(spec, k, who);
                if (spec.subsystems[static_cast<std::size_t>(k)].dim() != 2)
                    fail(who + ": flip-flop subsystems must be two-level");
            }
            if (!it.weights.empty() && it.weights.size() != it.spins.size())
                fail(who + ": weights length must match spins");
            break;
        case InteractionSpec::Kind::Dephasing:
            check_subsystem(spec, it.system, who);
            if (it.bath.size() != it.gammas.size() || it.bath.empty())
                fail(who + ": bath and gammas must be nonempty and of equal length");
            for (int k : it.bath)
                check_subsystem(spec, k, who);
            break;
        case InteractionSpec::Kind::Custom:
            if (it.custom.rows() != n || it.custom.cols() != n)
                fail(who + ": custom matrix dimension does not match setup");
            try {
                HermitianOperator h(it.custom);
            } catch (const ValidationError&) {
                fail(who + ": custom matrix is not Hermitian");
            }
            break;
        }
    }
    for (const auto& [name, p] : spec.partitions)
        p.validate(n);
    for (const auto& o : spec.observables) {
        const std::string who = "observable '" + o.name + "'";
        switch (o.kind) {
        case ObservableSpec::Kind::LocalDiagonal:
            check_subsystem(spec, o.subsystem, who);
            if (static_cast<int>(o.values.size()) != spec.subsystems[static_cast<std::size_t>(o.subsystem)].dim())
                fail(who + ": values length does not match subsystem dimension");
            break;
        case ObservableSpec::Kind::LocalHamiltonian:
            check_subsystem(spec, o.subsystem, who);
            break;
        case ObservableSpec::Kind::LocalMatrix: {
            check_subsystem(spec, o.subsystem, who);
            const int d = spec.subsystems[static_cast<std::size_t>(o.subsystem)].dim();
            if (o.custom.rows() != d || o.custom.cols() != d)
                fail(who + ": local matrix dimension does not match subsystem dimension");
            try {
                HermitianOperator h(o.custom);
            } catch (const ValidationError&) {
                fail(who + ": local matrix is not Hermitian");
            }
            break;
        }
        case ObservableSpec::Kind::Projector:
            if (o.states.empty())
                fail(who + ": projector needs at least one state");
            if (o.support.empty()) {
                for (const auto& s : o.states)
                    check_multi(spec, s, who);
            } else {
                for (int k : o.support)
                    check_subsystem(spec, k, who);
                for (const auto& s : o.states) {
                    if (s.size() != o.support.size())
                        fail(who + ": basis state must list one level per support subsystem");
                    for (std::size_t i = 0; i < s.size(); ++i)
                        if (s[i] < 0 || s[i] >= spec.subsystems[static_cast<std::size_t>(o.support[i])].dim())
                            fail(who + ": level index out of range");
                }
            }
            break;
        case ObservableSpec::Kind::Custom:
            if (o.custom.rows() != n || o.custom.cols() != n)
                fail(who + ": custom matrix dimension does not match setup");
            try {
                HermitianOperator h(o.custom);
            } catch (const ValidationError&) {
                fail(who + ": custom matrix is not Hermitian");
            }
            break;
        }
    }
    if (spec.pre_evolution) {
        for (const auto& name : spec.pre_evolution->interactions)
            if (!inames.count(name))
                fail("pre_evolution: unknown interaction '" + name + "'");
        if (!std::isfinite(spec.pre_evolution->time))
            fail("pre_evolution: time must be finite");
    }
    if (spec.demon) {
        if (!(spec.demon->p >= 0.0 && spec.demon->p <= 1.0))
            fail("demon: p must lie in [0, 1]");
        std::set<int> measured;
        for (const auto& [from, to] : spec.demon->replacements) {
            check_multi(spec, from, "demon");
            check_multi(spec, to, "demon");
            if (!measured.insert(flat_index(spec, from)).second)
                fail("demon: a measured state is listed twice");
        }
    }
    for (const auto& l : spec.simulate)
        subsystem_index(spec, l);
}

HermitianOperator local_operator(const SetupSpec& spec, int k, const Matrix& local)
{
    check_subsystem(spec, k, "local_operator");
    return HermitianOperator::trusted(embed_local(local, k, subsystem_dims(spec)));
}

HermitianOperator local_hamiltonian(const SetupSpec& spec, int k)
{
    check_subsystem(spec, k, "local_hamiltonian");
    const auto& s = spec.subsystems[static_cast<std::size_t>(k)];
    return local_operator(spec, k, HermitianOperator::diagonal(s.energy_levels).matrix()).with_label("H_" + s.label);
}

HermitianOperator total_hamiltonian(const SetupSpec& spec)
{
    HermitianOperator h = HermitianOperator::zero(total_dim(spec));
    for (int k = 0; k < static_cast<int>(spec.subsystems.size()); ++k)
        h = h + local_hamiltonian(spec, k);
    return h.with_label("H");
}

DensityMatrix initial_state(const SetupSpec& spec)
{
    const int n = total_dim(spec);
    if (spec.correlations)
        return DensityMatrix::from_populations(*spec.correlations);
    Matrix rho = Matrix::Identity(1, 1);
    for (const auto& s : spec.subsystems) {
        Matrix local;
        if (s.init == SubsystemSpec::Init::Thermal && s.init_generator)
            local = thermal_state(HermitianOperator(*s.init_generator), s.beta).matrix();
        else
            local = local_initial_populations(s).cast<cplx>().asDiagonal();
        rho = kron(rho, local);
    }
    (void)n;
    return DensityMatrix::trusted(rho);
}

BuildBResult build_B(const SetupSpec& spec, ZeroPopulationPolicy policy)
{
    validate_setup(spec);
    const int n = total_dim(spec);
    BuildBResult r;
    if (spec.correlations) {
        RVector p = Eigen::Map<const RVector>(spec.correlations->data(), n);
        for (int i = 0; i < n; ++i) {
            if (p(i) <= kEigenCutoff) {
                if (policy == ZeroPopulationPolicy::Reject)
                    throw DomainError("build_B: joint population " + std::to_string(i) +
                                      " is (numerically) zero; use the clamp policy");
                p(i) = kEigenCutoff;
                ++r.clamped;
            }
        }
        p /= p.sum();
        r.full = HermitianOperator::diagonal(RVector(-p.array().log()), "B");
        r.reduced = r.full;
        return r;
    }
    r.product_thermal = true;
    HermitianOperator reduced = HermitianOperator::zero(n);
    for (int k = 0; k < static_cast<int>(spec.subsystems.size()); ++k) {
        const auto& s = spec.subsystems[static_cast<std::size_t>(k)];
        Matrix local;
        if (s.init == SubsystemSpec::Init::Thermal) {
            const Matrix g = s.init_generator ? *s.init_generator
                                              : Matrix(HermitianOperator::diagonal(s.energy_levels).matrix());
            local = s.beta * g;
            r.log_partition += log_sum_exp_neg(s.beta * real_spectrum(g));
        } else {
            r.product_thermal = false;
            RVector p = local_initial_populations(s);
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                if (p(i) <= kEigenCutoff) {
                    if (policy == ZeroPopulationPolicy::Reject)
                        throw DomainError("build_B: subsystem '" + s.label +
                                          "' has a zero population; use the clamp policy");
                    p(i) = kEigenCutoff;
                    ++r.clamped;
                }
            }
            p /= p.sum();
            local = RVector(-p.array().log()).cast<cplx>().asDiagonal();
        }
        reduced = reduced + local_operator(spec, k, local);
    }
    r.reduced = reduced.with_label("B_reduced");
    r.full = reduced.shifted(r.log_partition).with_label("B");
    return r;
}

HermitianOperator interaction_hamiltonian(const SetupSpec& spec, const std::string& name)
{
    const auto dims = subsystem_dims(spec);
    const int n = total_dim(spec);
    for (const auto& it : spec.interactions) {
        if (it.name != name)
            continue;
        Matrix h = Matrix::Zero(n, n);
        switch (it.kind) {
        case InteractionSpec::Kind::Transitions:
            for (const auto& term : it.terms) {
                std::vector<Matrix> factors;
                for (int d : dims)
                    factors.push_back(Matrix::Identity(d, d));
                for (const auto& f : term)
                    factors[static_cast<std::size_t>(f.subsystem)] =
                        factors[static_cast<std::size_t>(f.subsystem)] * ketbra(dims[static_cast<std::size_t>(f.subsystem)], f.ket, f.bra);
                const Matrix t = kron_all(factors);
                h += t;
                if (it.add_conjugate)
                    h += t.adjoint();
            }
            break;
        case InteractionSpec::Kind::FlipFlop: {
            const Matrix up = ketbra(2, 1, 0);  // |0> -> |1>
            const Matrix down = ketbra(2, 0, 1);
            for (std::size_t a = 0; a < it.spins.size(); ++a)
                for (std::size_t b = 0; b < a; ++b) {
                    const double g = it.weights.empty() ? 1.0 : it.weights[a] * it.weights[b];
                    const Matrix x = embed_local(up, it.spins[a], dims) * embed_local(down, it.spins[b], dims);
                    h += g * (x + x.adjoint());
                }
            break;
        }
        case InteractionSpec::Kind::Dephasing: {
            const Matrix hs = local_hamiltonian(spec, it.system).matrix();
            for (std::size_t j = 0; j < it.bath.size(); ++j)
                h += it.gammas[j] * hs * local_hamiltonian(spec, it.bath[j]).matrix();
            break;
        }
        case InteractionSpec::Kind::Custom:
            h = it.custom;
            break;
        }
        return HermitianOperator(it.strength * h, name);
    }
    fail("unknown interaction '" + name + "'");
}

HermitianOperator observable(const SetupSpec& spec, const std::string& name)
{
    const int n = total_dim(spec);
    for (const auto& o : spec.observables) {
        if (o.name != name)
            continue;
        switch (o.kind) {
        case ObservableSpec::Kind::LocalDiagonal:
            return local_operator(spec, o.subsystem, HermitianOperator::diagonal(o.values).matrix()).with_label(name);
        case ObservableSpec::Kind::LocalHamiltonian:
            return (local_hamiltonian(spec, o.subsystem) * o.scale).with_label(name);
        case ObservableSpec::Kind::LocalMatrix:
            return local_operator(spec, o.subsystem, o.custom).with_label(name);
        case ObservableSpec::Kind::Projector: {
            RVector d = RVector::Zero(n);
            if (o.support.empty()) {
                for (const auto& s : o.states)
                    d(flat_index(spec, s)) = 1.0;
            } else {
                for (int i = 0; i < n; ++i) {
                    const std::vector<int> m = multi_index(spec, i);
                    std::vector<int> local;
                    for (int k : o.support)
                        local.push_back(m[static_cast<std::size_t>(k)]);
                    if (std::find(o.states.begin(), o.states.end(), local) != o.states.end())
                        d(i) = 1.0;
                }
            }
            return HermitianOperator::diagonal(d, name);
        }
        case ObservableSpec::Kind::Custom:
            return HermitianOperator(o.custom, name);
        }
    }
    fail("unknown observable '" + name + "'");
}

const ManifoldPartition& partition(const SetupSpec& spec, const std::string& name)
{
    const auto it = spec.partitions.find(name);
    if (it == spec.partitions.end())
        fail("unknown partition '" + name + "'");
    return it->second;
}

ManifoldPartition connected_components(const HermitianOperator& op, std::string description)
{
    const int n = op.dim();
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x)
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        return x;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(op.matrix()(i, j)) > 1e-14)
                parent[static_cast<std::size_t>(find(i))] = find(j);
    std::map<int, std::vector<int>> comps;
    for (int i = 0; i < n; ++i)
        comps[find(i)].push_back(i);
    ManifoldPartition p;
    p.description = std::move(description);
    for (auto& [root, members] : comps)
        p.blocks.push_back(std::move(members));
    std::sort(p.blocks.begin(), p.blocks.end());
    return p;
}

SetupSpec restrict_setup(const SetupSpec& spec, const std::vector<std::string>& labels)
{
    if (spec.correlations)
        fail("restrict_setup: correlated initial states cannot be restricted");
    std::vector<int> keep;
    for (const auto& l : labels)
        keep.push_back(subsystem_index(spec, l));
    std::map<int, int> remap;
    for (std::size_t i = 0; i < keep.size(); ++i)
        remap[keep[i]] = static_cast<int>(i);
    auto kept = [&](int k) { return remap.count(k) > 0; };

    SetupSpec out;
    out.schema_version = spec.schema_version;
    out.name = spec.name;
    out.parameters = spec.parameters;
    out.notes = spec.notes;
    for (int k : keep)
        out.subsystems.push_back(spec.subsystems[static_cast<std::size_t>(k)]);
    for (const auto& it : spec.interactions) {
        InteractionSpec c = it;
        bool ok = true;
        switch (it.kind) {
        case InteractionSpec::Kind::Transitions:
            for (auto& term : c.terms)
                for (auto& f : term) {
                    ok = ok && kept(f.subsystem);
                    if (ok)
                        f.subsystem = remap[f.subsystem];
                }
            break;
        case InteractionSpec::Kind::FlipFlop: {
            c.spins.clear();
            c.weights.clear();
            for (std::size_t i = 0; i < it.spins.size(); ++i)
                if (kept(it.spins[i])) {
                    c.spins.push_back(remap[it.spins[i]]);
                    if (!it.weights.empty())
                        c.weights.push_back(it.weights[i]);
                }
            ok = c.spins.size() >= 2;
            break;
        }
        case InteractionSpec::Kind::Dephasing:
            ok = kept(it.system);
            if (ok) {
                c.system = remap[it.system];
                c.bath.clear();
                c.gammas.clear();
                for (std::size_t i = 0; i < it.bath.size(); ++i)
                    if (kept(it.bath[i])) {
                        c.bath.push_back(remap[it.bath[i]]);
                        c.gammas.push_back(it.gammas[i]);
                    }
                ok = !c.bath.empty();
            }
            break;
        case InteractionSpec::Kind::Custom:
            ok = false;
            break;
        }
        if (ok)
            out.interactions.push_back(std::move(c));
    }
    for (const auto& o : spec.observables) {
        if ((o.kind == ObservableSpec::Kind::LocalDiagonal || o.kind == ObservableSpec::Kind::LocalHamiltonian ||
             o.kind == ObservableSpec::Kind::LocalMatrix) &&
            kept(o.subsystem)) {
            ObservableSpec c = o;
            c.subsystem = remap[o.subsystem];
            out.observables.push_back(std::move(c));
        }
        if (o.kind == ObservableSpec::Kind::Projector && !o.support.empty() &&
            std::all_of(o.support.begin(), o.support.end(), kept)) {
            ObservableSpec c = o;
            for (int& k : c.support)
                k = remap[k];
            out.observables.push_back(std::move(c));
        }
    }
    if (spec.pre_evolution) {
        PreEvolutionSpec pe = *spec.pre_evolution;
        pe.interactions.clear();
        for (const auto& name : spec.pre_evolution->interactions)
            for (const auto& it : out.interactions)
                if (it.name == name)
                    pe.interactions.push_back(name);
        if (!pe.interactions.empty())
            out.pre_evolution = pe;
    }
    validate_setup(out);
    return out;
}

double thermal_beta(const SetupSpec& spec, int k)
{
    check_subsystem(spec, k, "thermal_beta");
    const auto& s = spec.subsystems[static_cast<std::size_t>(k)];
    if (s.init != SubsystemSpec::Init::Thermal || s.init_generator)
        fail("subsystem '" + s.label + "' is not thermal with respect to its energy");
    return s.beta;
}

} // namespace pdeform
