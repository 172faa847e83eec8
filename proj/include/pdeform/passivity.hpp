#pragma once

#include "pdeform/qstate.hpp"

namespace pdeform {

struct PassiveResult {
    DensityMatrix state;
    Matrix unitary;  // state = unitary * rho * unitary^dagger
};

enum class OrderingMode { SameOrder, ReverseOrder };

struct OrderingReport {
    double chi_value = 0.0;
    OrderingMode mode = OrderingMode::SameOrder;
    bool is_zero = false;
};

PassiveResult passive_state_of(const DensityMatrix& rho, const HermitianOperator& a);

// chi(A,B) = tr(AB) - lambda_A(desc) . lambda_B(desc or asc).
OrderingReport ordering_function(const HermitianOperator& a, const HermitianOperator& b, OrderingMode mode);

// True when A commutes with rho0 and higher populations never sit on
// strictly higher eigenvalues of A.
bool is_globally_passive(const HermitianOperator& a, const DensityMatrix& rho0, double rel_tol = 1e-9);

// sgn(alpha) (-ln rho0)^alpha.
HermitianOperator gp_family(const DensityMatrix& rho0, double alpha,
                            ZeroPopulationPolicy policy = ZeroPopulationPolicy::Reject);

double min_expectation(const DensityMatrix& rho, const HermitianOperator& a);

} // namespace pdeform
