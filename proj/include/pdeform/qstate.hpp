#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pdeform/errors.hpp"

namespace pdeform {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kEigenCutoff = 1e-14;
inline constexpr std::size_t kDefaultDimCap = 4096;

// Relative tolerance used for degeneracy grouping: rel * (max|x| + 1).
double relative_tol(const RVector& values, double rel = 1e-9);

class HermitianOperator {
public:
    HermitianOperator() = default;
    explicit HermitianOperator(Matrix entries, std::string label = {}, double tol = kHermitianTol);

    static HermitianOperator diagonal(const RVector& values, std::string label = {});
    static HermitianOperator diagonal(const std::vector<double>& values, std::string label = {});
    static HermitianOperator identity(int dim);
    static HermitianOperator zero(int dim);
    // Skips validation; the matrix is symmetrised.
    static HermitianOperator trusted(Matrix entries, std::string label = {});

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    const std::string& label() const { return label_; }
    HermitianOperator with_label(std::string label) const;

    bool is_diagonal(double tol = 1e-13) const;
    RVector diagonal_real() const;

    HermitianOperator operator+(const HermitianOperator& o) const;
    HermitianOperator operator-(const HermitianOperator& o) const;
    HermitianOperator operator*(double s) const;
    HermitianOperator shifted(double c) const;

private:
    Matrix m_;
    std::string label_;
};

inline HermitianOperator operator*(double s, const HermitianOperator& op) { return op * s; }

class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(Matrix entries, double tol = kHermitianTol);

    static DensityMatrix from_populations(const RVector& p);
    static DensityMatrix from_populations(const std::vector<double>& p);
    static DensityMatrix maximally_mixed(int dim);
    static DensityMatrix pure(const Eigen::VectorXcd& psi);
    // For outputs of operations already known to be valid states.
    static DensityMatrix trusted(Matrix entries);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    bool is_diagonal(double tol = 1e-13) const;
    RVector populations() const;
    RVector eigenvalues() const;

private:
    Matrix m_;
};

struct Spectrum {
    RVector values;  // ascending
    Matrix vectors;  // columns aligned with values
    std::vector<std::vector<int>> degeneracy_groups;
};

struct UnitaryTerm {
    double weight = 1.0;
    Matrix unitary;
};

class MixtureOfUnitaries {
public:
    MixtureOfUnitaries() = default;
    explicit MixtureOfUnitaries(std::vector<UnitaryTerm> terms);
    static MixtureOfUnitaries single(Matrix unitary);

    const std::vector<UnitaryTerm>& terms() const { return terms_; }
    int dim() const;

private:
    std::vector<UnitaryTerm> terms_;
};

struct IdentitySlot {
    int dim = 1;
};
using EmbedSlot = std::variant<HermitianOperator, IdentitySlot>;

// Monotone maps applied to operator eigenvalues.
struct MonotoneMap {
    enum class Kind { NegLog, SignedPower, Affine };
    Kind kind = Kind::Affine;
    double alpha = 1.0;
    double a = 1.0;
    double b = 0.0;

    static MonotoneMap neg_log() { return {Kind::NegLog, 1.0, 1.0, 0.0}; }
    static MonotoneMap signed_power(double alpha) { return {Kind::SignedPower, alpha, 1.0, 0.0}; }
    static MonotoneMap affine(double a, double b) { return {Kind::Affine, 1.0, a, b}; }
};

enum class ZeroPopulationPolicy { Reject, Clamp };

struct FunctionResult {
    HermitianOperator op;
    std::size_t clamped = 0;  // eigenvalues replaced under the clamp policy
};

struct CommonBasis {
    Matrix basis;  // columns: shared eigenvectors
    RVector first;
    RVector second;
    bool computational = false;  // basis is the identity
};

bool is_unitary(const Matrix& u, double tol = kUnitaryTol);
Matrix kron(const Matrix& a, const Matrix& b);
Matrix kron_all(const std::vector<Matrix>& factors);
// Places `local` at position `slot` of a register with the given dims.
Matrix embed_local(const Matrix& local, int slot, const std::vector<int>& dims);

DensityMatrix thermal_state(const HermitianOperator& h, double beta);
HermitianOperator tensor_embed(const std::vector<EmbedSlot>& slots, std::size_t dim_cap = kDefaultDimCap);

// degeneracy_tol <= 0 selects the default relative tolerance.
Spectrum eig_sorted(const HermitianOperator& op, double degeneracy_tol = -1.0);
std::vector<std::vector<int>> group_sorted(const RVector& ascending, double tol);

double expectation(const DensityMatrix& state, const HermitianOperator& op);
DensityMatrix evolve(const DensityMatrix& state, const MixtureOfUnitaries& channel);
DensityMatrix conjugate(const DensityMatrix& state, const Matrix& unitary);
Matrix unitary_from_hamiltonian(const HermitianOperator& h, double t);
DensityMatrix evolve_hamiltonian(const DensityMatrix& state, const HermitianOperator& h, double t);
// Unitary power U^s through a Schur decomposition (principal branch).
Matrix unitary_power(const Matrix& u, double s);

DensityMatrix partial_trace(const DensityMatrix& state, const std::vector<int>& dims, const std::vector<int>& keep);

double entropy(const DensityMatrix& state);
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);
double mutual_information(const DensityMatrix& state, const std::vector<int>& dims, const std::vector<int>& part_a);

HermitianOperator operator_function(const HermitianOperator& op, const MonotoneMap& f,
                                    ZeroPopulationPolicy policy = ZeroPopulationPolicy::Reject);
FunctionResult operator_function_report(const HermitianOperator& op, const MonotoneMap& f,
                                        ZeroPopulationPolicy policy = ZeroPopulationPolicy::Reject);
// -ln rho as an operator.
FunctionResult neg_log_state(const DensityMatrix& rho, ZeroPopulationPolicy policy = ZeroPopulationPolicy::Reject);

// Shared eigenbasis of two commuting operators. The first operator's
// degenerate blocks are resolved by diagonalising the second inside them.
// Throws ValidationError when the operators do not commute.
CommonBasis common_eigenbasis(const HermitianOperator& first, const HermitianOperator& second, double rel_tol = 1e-9);

double commutator_norm(const Matrix& a, const Matrix& b);

} // namespace pdeform
