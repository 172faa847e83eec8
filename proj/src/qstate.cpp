#include "pdeform/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pdeform {

namespace {

struct Eig {
    RVector w;  // ascending
    Matrix v;
};

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool matrix_is_diagonal(const Matrix& m, double tol)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j && std::abs(m(i, j)) > tol)
                return false;
    return true;
}

Matrix symmetrise(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Diagonal inputs keep the computational basis (as a stable permutation) so
// that index-level results stay exact.
Eig eigh(const Matrix& m)
{
    const auto n = m.rows();
    Eig out;
    if (matrix_is_diagonal(m, 0.0)) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return m(a, a).real() < m(b, b).real(); });
        out.w.resize(n);
        out.v = Matrix::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            out.w(k) = m(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k)]).real();
            out.v(idx[static_cast<std::size_t>(k)], k) = 1.0;
        }
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver failed to converge");
    out.w = es.eigenvalues();
    out.v = es.eigenvectors();
    const double residual = max_abs(m * out.v - out.v * out.w.cast<cplx>().asDiagonal());
    if (residual > 1e-8 * (max_abs(m) + 1.0)) {
        std::ostringstream os;
        os << "eigensolver residual too large: " << residual;
        throw NumericalError(os.str());
    }
    return out;
}

Matrix rebuild(const Eig& e, const RVector& mapped)
{
    return e.v * mapped.cast<cplx>().asDiagonal() * e.v.adjoint();
}

void check_square(const Matrix& m, const char* what)
{
    if (m.rows() != m.cols() || m.rows() < 1)
        throw ValidationError(std::string(what) + ": matrix must be square with dim >= 1");
}

void check_hermitian(const Matrix& m, double tol, const char* what)
{
    check_square(m, what);
    const double dev = max_abs(m - m.adjoint());
    if (!(dev <= tol)) {
        std::ostringstream os;
        os << what << ": not Hermitian (max deviation " << dev << ")";
        throw ValidationError(os.str());
    }
}

double xlogx_sum(const RVector& p)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > kEigenCutoff)
            s -= p(i) * std::log(p(i));
    return s;
}

std::size_t product(const std::vector<int>& dims)
{
    std::size_t n = 1;
    for (int d : dims) {
        if (d < 1)
            throw ValidationError("subsystem dimensions must be >= 1");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

} // namespace

double relative_tol(const RVector& values, double rel)
{
    const double m = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
    return rel * (m + 1.0);
}

// HermitianOperator

HermitianOperator::HermitianOperator(Matrix entries, std::string label, double tol)
    : label_(std::move(label))
{
    check_hermitian(entries, tol, "HermitianOperator");
    m_ = symmetrise(entries);
}

HermitianOperator HermitianOperator::trusted(Matrix entries, std::string label)
{
    HermitianOperator op;
    op.m_ = symmetrise(entries);
    op.label_ = std::move(label);
    return op;
}

HermitianOperator HermitianOperator::diagonal(const RVector& values, std::string label)
{
    if (values.size() < 1)
        throw ValidationError("diagonal operator needs at least one value");
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (!std::isfinite(values(i)))
            throw ValidationError("diagonal operator entries must be finite");
    return trusted(values.cast<cplx>().asDiagonal(), std::move(label));
}

HermitianOperator HermitianOperator::diagonal(const std::vector<double>& values, std::string label)
{
    return diagonal(RVector(Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()))),
                    std::move(label));
}

HermitianOperator HermitianOperator::identity(int dim) { return trusted(Matrix::Identity(dim, dim)); }

HermitianOperator HermitianOperator::zero(int dim) { return trusted(Matrix::Zero(dim, dim)); }

HermitianOperator HermitianOperator::with_label(std::string label) const
{
    HermitianOperator op = *this;
    op.label_ = std::move(label);
    return op;
}

bool HermitianOperator::is_diagonal(double tol) const { return matrix_is_diagonal(m_, tol); }

RVector HermitianOperator::diagonal_real() const { return m_.diagonal().real(); }

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const
{
    if (o.dim() != dim())
        throw ValidationError("operator dimension mismatch in sum");
    return trusted(m_ + o.m_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const
{
    if (o.dim() != dim())
        throw ValidationError("operator dimension mismatch in difference");
    return trusted(m_ - o.m_);
}

HermitianOperator HermitianOperator::operator*(double s) const { return trusted(m_ * s, label_); }

HermitianOperator HermitianOperator::shifted(double c) const
{
    return trusted(m_ + c * Matrix::Identity(dim(), dim()), label_);
}

// DensityMatrix

DensityMatrix::DensityMatrix(Matrix entries, double tol)
{
    check_hermitian(entries, tol, "DensityMatrix");
    m_ = symmetrise(entries);
    const cplx tr = m_.trace();
    if (std::abs(tr - 1.0) > tol) {
        std::ostringstream os;
        os << "DensityMatrix: trace " << tr.real() << " differs from 1";
        throw ValidationError(os.str());
    }
    const RVector ev = eigh(m_).w;
    if (ev.size() && ev(0) < -tol) {
        std::ostringstream os;
        os << "DensityMatrix: negative eigenvalue " << ev(0);
        throw ValidationError(os.str());
    }
}

DensityMatrix DensityMatrix::trusted(Matrix entries)
{
    DensityMatrix d;
    d.m_ = symmetrise(entries);
    return d;
}

DensityMatrix DensityMatrix::from_populations(const RVector& p)
{
    return DensityMatrix(p.cast<cplx>().asDiagonal().toDenseMatrix());
}

DensityMatrix DensityMatrix::from_populations(const std::vector<double>& p)
{
    return from_populations(RVector(Eigen::Map<const RVector>(p.data(), static_cast<Eigen::Index>(p.size()))));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim)
{
    if (dim < 1)
        throw ValidationError("dimension must be >= 1");
    return trusted(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi)
{
    const double n = psi.norm();
    if (!(n > 0.0))
        throw ValidationError("pure state vector must be nonzero");
    const Eigen::VectorXcd u = psi / n;
    return trusted(u * u.adjoint());
}

bool DensityMatrix::is_diagonal(double tol) const { return matrix_is_diagonal(m_, tol); }

RVector DensityMatrix::populations() const { return m_.diagonal().real(); }

RVector DensityMatrix::eigenvalues() const { return eigh(m_).w; }

// MixtureOfUnitaries

bool is_unitary(const Matrix& u, double tol)
{
    if (u.rows() != u.cols())
        return false;
    return max_abs(u * u.adjoint() - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

MixtureOfUnitaries::MixtureOfUnitaries(std::vector<UnitaryTerm> terms)
    : terms_(std::move(terms))
{
    if (terms_.empty())
        throw ValidationError("mixture of unitaries needs at least one term");
    double total = 0.0;
    const auto d = terms_.front().unitary.rows();
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        if (!(t.weight >= 0.0))
            throw ValidationError("mixture weights must be nonnegative");
        if (t.unitary.rows() != d || !is_unitary(t.unitary))
            throw ValidationError("mixture term " + std::to_string(k) + " is not a unitary of matching dimension");
        total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("mixture weights must sum to 1");
}

MixtureOfUnitaries MixtureOfUnitaries::single(Matrix unitary) { return MixtureOfUnitaries({{1.0, std::move(unitary)}}); }

int MixtureOfUnitaries::dim() const { return terms_.empty() ? 0 : static_cast<int>(terms_.front().unitary.rows()); }

// Composition

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix kron_all(const std::vector<Matrix>& factors)
{
    Matrix out = Matrix::Identity(1, 1);
    for (const auto& f : factors)
        out = kron(out, f);
    return out;
}

Matrix embed_local(const Matrix& local, int slot, const std::vector<int>& dims)
{
    if (slot < 0 || slot >= static_cast<int>(dims.size()))
        throw ValidationError("embed_local: slot out of range");
    if (local.rows() != dims[static_cast<std::size_t>(slot)] || local.cols() != local.rows())
        throw ValidationError("embed_local: local operator dimension does not match slot");
    std::size_t left = 1, right = 1;
    for (int k = 0; k < slot; ++k)
        left *= static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]);
    for (std::size_t k = static_cast<std::size_t>(slot) + 1; k < dims.size(); ++k)
        right *= static_cast<std::size_t>(dims[k]);
    const auto l = static_cast<Eigen::Index>(left);
    const auto r = static_cast<Eigen::Index>(right);
    return kron(kron(Matrix::Identity(l, l), local), Matrix::Identity(r, r));
}

HermitianOperator tensor_embed(const std::vector<EmbedSlot>& slots, std::size_t dim_cap)
{
    if (slots.empty())
        throw ValidationError("tensor_embed needs at least one slot");
    std::size_t total = 1;
    for (const auto& s : slots) {
        const int d = std::holds_alternative<IdentitySlot>(s) ? std::get<IdentitySlot>(s).dim
                                                              : std::get<HermitianOperator>(s).dim();
        if (d < 1)
            throw ValidationError("tensor_embed: slot dimension must be >= 1");
        total *= static_cast<std::size_t>(d);
        if (total > dim_cap)
            throw ResourceError("tensor_embed: dimension " + std::to_string(total) + " exceeds cap " +
                                std::to_string(dim_cap));
    }
    std::vector<Matrix> factors;
    factors.reserve(slots.size());
    for (const auto& s : slots) {
        if (std::holds_alternative<IdentitySlot>(s)) {
            const int d = std::get<IdentitySlot>(s).dim;
            factors.push_back(Matrix::Identity(d, d));
        } else {
            factors.push_back(std::get<HermitianOperator>(s).matrix());
        }
    }
    return HermitianOperator::trusted(kron_all(factors));
}

// States

DensityMatrix thermal_state(const HermitianOperator& h, double beta)
{
    if (!std::isfinite(beta) || beta < 0.0)
        throw ValidationError("thermal_state: beta must be finite and >= 0");
    const Eig e = eigh(h.matrix());
    RVector w(e.w.size());
    const double e0 = e.w.minCoeff();
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w(i) = std::exp(-beta * (e.w(i) - e0));
    w /= w.sum();
    return DensityMatrix::trusted(rebuild(e, w));
}

Spectrum eig_sorted(const HermitianOperator& op, double degeneracy_tol)
{
    const Eig e = eigh(op.matrix());
    Spectrum s;
    s.values = e.w;
    s.vectors = e.v;
    const double tol = degeneracy_tol > 0.0 ? degeneracy_tol : relative_tol(e.w);
    s.degeneracy_groups = group_sorted(e.w, tol);
    return s;
}

std::vector<std::vector<int>> group_sorted(const RVector& ascending, double tol)
{
    std::vector<std::vector<int>> groups;
    for (Eigen::Index i = 0; i < ascending.size(); ++i) {
        if (groups.empty() || ascending(i) - ascending(i - 1) >= tol)
            groups.emplace_back();
        groups.back().push_back(static_cast<int>(i));
    }
    return groups;
}

double expectation(const DensityMatrix& state, const HermitianOperator& op)
{
    if (state.dim() != op.dim())
        throw ValidationError("expectation: dimension mismatch");
    const cplx v = (state.matrix().cwiseProduct(op.matrix().transpose())).sum();
    if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real())))
        throw ConsistencyError("expectation: imaginary residue above tolerance");
    return v.real();
}

DensityMatrix conjugate(const DensityMatrix& state, const Matrix& unitary)
{
    if (unitary.rows() != state.dim())
        throw ValidationError("conjugate: dimension mismatch");
    return DensityMatrix::trusted(unitary * state.matrix() * unitary.adjoint());
}

DensityMatrix evolve(const DensityMatrix& state, const MixtureOfUnitaries& channel)
{
    if (channel.dim() != state.dim())
        throw ValidationError("evolve: channel dimension does not match state");
    Matrix out = Matrix::Zero(state.dim(), state.dim());
    for (const auto& t : channel.terms())
        out += t.weight * (t.unitary * state.matrix() * t.unitary.adjoint());
    return DensityMatrix::trusted(out);
}

Matrix unitary_from_hamiltonian(const HermitianOperator& h, double t)
{
    if (!std::isfinite(t))
        throw ValidationError("evolution time must be finite");
    const Eig e = eigh(h.matrix());
    Eigen::VectorXcd ph(e.w.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i)
        ph(i) = std::exp(cplx(0.0, -e.w(i) * t));
    return e.v * ph.asDiagonal() * e.v.adjoint();
}

DensityMatrix evolve_hamiltonian(const DensityMatrix& state, const HermitianOperator& h, double t)
{
    if (h.dim() != state.dim())
        throw ValidationError("evolve_hamiltonian: dimension mismatch");
    return conjugate(state, unitary_from_hamiltonian(h, t));
}

Matrix unitary_power(const Matrix& u, double s)
{
    if (!is_unitary(u))
        throw ValidationError("unitary_power: input is not unitary");
    Eigen::ComplexSchur<Matrix> schur(u);
    if (schur.info() != Eigen::Success)
        throw NumericalError("unitary_power: Schur decomposition failed");
    const Matrix& t = schur.matrixT();
    const Matrix& q = schur.matrixU();
    Eigen::VectorXcd d(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        d(i) = std::exp(s * std::log(t(i, i)));
    return q * d.asDiagonal() * q.adjoint();
}

DensityMatrix partial_trace(const DensityMatrix& state, const std::vector<int>& dims, const std::vector<int>& keep)
{
    const std::size_t n = product(dims);
    if (n != static_cast<std::size_t>(state.dim()))
        throw ValidationError("partial_trace: dims product does not match state dimension");
    const int ns = static_cast<int>(dims.size());
    std::vector<bool> kept(static_cast<std::size_t>(ns), false);
    for (int k : keep) {
        if (k < 0 || k >= ns || kept[static_cast<std::size_t>(k)])
            throw ValidationError("partial_trace: invalid keep index set");
        kept[static_cast<std::size_t>(k)] = true;
    }
    std::size_t dk = 1, dt = 1;
    for (int k = 0; k < ns; ++k)
        (kept[static_cast<std::size_t>(k)] ? dk : dt) *= static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]);

    // full index of (kept multi-index, traced multi-index)
    std::vector<std::size_t> full(dk * dt);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i, ki = 0, ti = 0, kmul = 1, tmul = 1;
        for (int k = ns - 1; k >= 0; --k) {
            const auto d = static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]);
            const std::size_t digit = rem % d;
            rem /= d;
            if (kept[static_cast<std::size_t>(k)]) {
                ki += digit * kmul;
                kmul *= d;
            } else {
                ti += digit * tmul;
                tmul *= d;
            }
        }
        full[ki * dt + ti] = i;
    }
    const auto dke = static_cast<Eigen::Index>(dk);
    Matrix out = Matrix::Zero(dke, dke);
    const Matrix& m = state.matrix();
    for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t b = 0; b < dk; ++b) {
            cplx s = 0.0;
            for (std::size_t t = 0; t < dt; ++t)
                s += m(static_cast<Eigen::Index>(full[a * dt + t]), static_cast<Eigen::Index>(full[b * dt + t]));
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
        }
    return DensityMatrix::trusted(out);
}

double entropy(const DensityMatrix& state) { return std::max(0.0, xlogx_sum(state.eigenvalues())); }

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma)
{
    if (rho.dim() != sigma.dim())
        throw ValidationError("relative_entropy: dimension mismatch");
    const Eig es = eigh(sigma.matrix());
    const Matrix rot = es.v.adjoint() * rho.matrix() * es.v;
    double cross = 0.0;
    for (Eigen::Index k = 0; k < es.w.size(); ++k) {
        const double weight = rot(k, k).real();
        if (es.w(k) <= kEigenCutoff) {
            if (weight > kEigenCutoff)
                throw DomainError("relative_entropy: support of rho not contained in support of sigma (D = +inf)");
            continue;
        }
        cross += weight * std::log(es.w(k));
    }
    return -xlogx_sum(rho.eigenvalues()) - cross;
}

double mutual_information(const DensityMatrix& state, const std::vector<int>& dims, const std::vector<int>& part_a)
{
    std::vector<int> part_b;
    for (int k = 0; k < static_cast<int>(dims.size()); ++k)
        if (std::find(part_a.begin(), part_a.end(), k) == part_a.end())
            part_b.push_back(k);
    if (part_a.empty() || part_b.empty())
        throw ValidationError("mutual_information: bipartition must have two nonempty parts");
    return entropy(partial_trace(state, dims, part_a)) + entropy(partial_trace(state, dims, part_b)) - entropy(state);
}

// Operator functions

FunctionResult operator_function_report(const HermitianOperator& op, const MonotoneMap& f, ZeroPopulationPolicy policy)
{
    const Eig e = eigh(op.matrix());
    RVector w = e.w;
    FunctionResult res;
    switch (f.kind) {
    case MonotoneMap::Kind::NegLog:
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w(i) <= kEigenCutoff) {
                if (policy == ZeroPopulationPolicy::Reject)
                    throw DomainError("neg_log: eigenvalue below cutoff 1e-14; the state is (numerically) singular. "
                                      "Use the clamp zero-population policy or treat beta -> inf analytically");
                w(i) = kEigenCutoff;
                ++res.clamped;
            }
            w(i) = -std::log(w(i));
        }
        break;
    case MonotoneMap::Kind::SignedPower: {
        if (f.alpha == 0.0)
            throw ValidationError("signed_power: alpha must be nonzero");
        const double tol = 1e-12 * (w.cwiseAbs().maxCoeff() + 1.0);
        const double sgn = f.alpha > 0.0 ? 1.0 : -1.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w(i) < -tol)
                throw DomainError("signed_power: operator has a negative eigenvalue");
            const double x = std::max(0.0, w(i));
            if (x == 0.0 && f.alpha < 0.0)
                throw DomainError("signed_power: zero eigenvalue with negative alpha");
            w(i) = sgn * std::pow(x, f.alpha);
        }
        break;
    }
    case MonotoneMap::Kind::Affine:
        w = f.a * w.array() + f.b;
        break;
    }
    res.op = HermitianOperator::trusted(rebuild(e, w), op.label());
    return res;
}

HermitianOperator operator_function(const HermitianOperator& op, const MonotoneMap& f, ZeroPopulationPolicy policy)
{
    return operator_function_report(op, f, policy).op;
}

FunctionResult neg_log_state(const DensityMatrix& rho, ZeroPopulationPolicy policy)
{
    const Eig e = eigh(rho.matrix());
    RVector w = e.w;
    FunctionResult res;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) <= kEigenCutoff) {
            if (policy == ZeroPopulationPolicy::Reject)
                throw DomainError("neg_log: population below cutoff 1e-14; the state is (numerically) singular. "
                                  "Use the clamp zero-population policy or treat beta -> inf analytically");
            w(i) = kEigenCutoff;
            ++res.clamped;
        }
    }
    if (res.clamped)
        w /= w.sum();
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w(i) = -std::log(w(i));
    res.op = HermitianOperator::trusted(rebuild(e, w), "B");
    return res;
}

double commutator_norm(const Matrix& a, const Matrix& b) { return max_abs(a * b - b * a); }

CommonBasis common_eigenbasis(const HermitianOperator& first, const HermitianOperator& second, double rel_tol)
{
    if (first.dim() != second.dim())
        throw ValidationError("common_eigenbasis: dimension mismatch");
    const double scale = (max_abs(first.matrix()) + 1.0) * (max_abs(second.matrix()) + 1.0);
    if (commutator_norm(first.matrix(), second.matrix()) > rel_tol * scale)
        throw ValidationError("operators do not commute; express the direction operator in the eigenbasis of the "
                              "base operator (a common eigenbasis is required)");
    CommonBasis cb;
    if (first.is_diagonal(0.0) && second.is_diagonal(0.0)) {
        cb.basis = Matrix::Identity(first.dim(), first.dim());
        cb.first = first.diagonal_real();
        cb.second = second.diagonal_real();
        cb.computational = true;
        return cb;
    }
    const Eig e = eigh(first.matrix());
    const auto groups = group_sorted(e.w, relative_tol(e.w, rel_tol));
    Matrix v = e.v;
    for (const auto& g : groups) {
        if (g.size() < 2)
            continue;
        const auto start = g.front();
        const auto len = static_cast<Eigen::Index>(g.size());
        const Matrix block = v.middleCols(start, len);
        const Matrix sub = symmetrise(block.adjoint() * second.matrix() * block);
        const Eig se = eigh(sub);
        v.middleCols(start, len) = block * se.v;
    }
    const Matrix f = v.adjoint() * first.matrix() * v;
    const Matrix s = v.adjoint() * second.matrix() * v;
    cb.basis = v;
    cb.first = f.diagonal().real();
    cb.second = s.diagonal().real();
    const double off = max_abs(s - Matrix(s.diagonal().asDiagonal()));
    if (off > 1e-7 * (max_abs(second.matrix()) + 1.0))
        throw ValidationError("common_eigenbasis: second operator is not diagonal in the shared basis");
    return cb;
}

} // namespace pdeform
