#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdeform/deformation.hpp"
#include "pdeform/qstate.hpp"

namespace pdeform {

struct SortingProtocol {
    // Population of basis state i is moved to basis state permutation[i].
    std::vector<int> permutation;
    bool partial = false;
    double achieved_value = 0.0;
    int transpositions = 0;
    Matrix unitary;
    Matrix basis;  // basis in which the permutation acts
};

// Sorts the populations of rho0 against the spectrum of A. Partial mode keeps
// only moves that cross A-degenerate blocks and requires [rho0, A] = 0.
SortingProtocol optimal_protocol(const DensityMatrix& rho0, const HermitianOperator& a, bool partial);

int transposition_count(const std::vector<int>& permutation);

// min over permutations s of sum_i populations_i values_s(i), enumerating the
// distinct arrangements of `values`. Throws ResourceError past `max_arrangements`.
double exhaustive_min_value(const RVector& populations, const RVector& values,
                            long long max_arrangements = 20'000'000);

class DemonChannel {
public:
    DemonChannel() = default;
    DemonChannel(std::vector<Matrix> projectors, std::vector<Matrix> feedbacks, double p);

    // Measures in the computational basis; outcome `from` is replaced by `to`.
    static DemonChannel from_replacements(int dim, const std::vector<std::pair<int, int>>& replacements, double p);

    const std::vector<Matrix>& projectors() const { return projectors_; }
    const std::vector<Matrix>& feedbacks() const { return feedbacks_; }
    double p() const { return p_; }
    DemonChannel with_p(double p) const;
    int dim() const;

private:
    std::vector<Matrix> projectors_;
    std::vector<Matrix> feedbacks_;
    double p_ = 0.0;
};

DensityMatrix demon_evolve(const DensityMatrix& rho, const DemonChannel& channel);

struct InequalityEvaluator {
    std::string name;
    std::function<double(const DensityMatrix& rho0, const DensityMatrix& rhof)> slack;
};

InequalityEvaluator ci_evaluator(const DensityMatrix& rho0);
InequalityEvaluator gp_evaluator(const DensityMatrix& rho0, double alpha);
InequalityEvaluator inequality_evaluator(std::string name, const LinearInequality& q);
InequalityEvaluator deformation_evaluator(const DeformationBound& bound);
// Both sign branches of a threshold pair; the tighter one decides.
InequalityEvaluator deformation_pair_evaluator(const XiThresholds& thresholds);
InequalityEvaluator truncated_evaluator();
InequalityEvaluator binary_evaluator();
InequalityEvaluator majorization_evaluator();

struct ThresholdOptions {
    double grid_step = 0.01;
    double resolution = 1e-4;
    double margin = 1e-9;
};

// Smallest activation probability at which the inequality is violated; +inf if never.
double detection_threshold(const DensityMatrix& rho0, const MixtureOfUnitaries& pre_evolution,
                           const DemonChannel& demon, const InequalityEvaluator& inequality,
                           const ThresholdOptions& options = {});

struct CIGapDecomposition {
    double dS_sys = 0.0;
    double beta_dE_env = 0.0;
    double D_correlation = 0.0;
    double D_env_displacement = 0.0;
    bool infinite_term = false;

    double lhs() const { return dS_sys + beta_dE_env; }
    double residual() const { return lhs() - D_correlation - D_env_displacement; }
};

CIGapDecomposition ci_gap_decomposition(const DensityMatrix& rho0_sys, const HermitianOperator& h_env, double beta,
                                        const Matrix& u);

} // namespace pdeform
