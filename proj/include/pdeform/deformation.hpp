#pragma once

#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pdeform/qstate.hpp"
#include "pdeform/random.hpp"
#include "pdeform/setup.hpp"

namespace pdeform {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_k c_k Delta<O_k> >= rhs
struct LinearInequality {
    std::vector<std::pair<double, HermitianOperator>> terms;
    double rhs = 0.0;
    std::string text;

    double lhs(const DensityMatrix& rho0, const DensityMatrix& rhof) const;
    double slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const { return lhs(rho0, rhof) - rhs; }
};

struct XiCandidate {
    int i = 0;
    int j = 0;
    double value = 0.0;
};

struct XiThresholds {
    double xi_minus = -kInf;
    double xi_plus = kInf;
    std::vector<XiCandidate> xi_k_list;
    bool restricted = false;
    std::optional<ManifoldPartition> partition_used;
    HermitianOperator base;
    HermitianOperator direction;
    CommonBasis basis;

    double magnitude_minus() const { return -xi_minus; }
    double magnitude_plus() const { return xi_plus; }
};

enum class BoundSense {
    Increase,  // Delta<A> <= Delta<B> / (-xi_minus)
    Decrease   // -Delta<A> <= Delta<B> / xi_plus
};

struct DeformationBound {
    HermitianOperator base;
    HermitianOperator direction;
    double xi_used = 0.0;
    BoundSense sense = BoundSense::Increase;
    bool sign_definite = false;
    std::string provenance;
    LinearInequality inequality;

    double slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const { return inequality.slack(rho0, rhof); }
};

struct DeformationCheck {
    bool ok = true;
    std::vector<std::pair<int, int>> witnesses;
};

struct BspGroups {
    std::vector<std::vector<int>> groups;  // indices in the common eigenbasis
    Matrix basis;
    bool empty = true;
};

struct BspVerification {
    int trials = 0;
    double max_residual = 0.0;  // max |Delta<B> + xi Delta<A>|
    double min_delta_a = kInf;
    double max_delta_a = -kInf;
    double min_delta_b = kInf;
    double max_delta_b = -kInf;
    bool holds = false;
};

enum class LadderSource { ProductThermal, ProductPassive, ClassicallyCorrelated };

struct Floor {
    double value = 0.0;
    int index = 0;  // level of the floor subsystem
};

struct LaddersDiagram {
    std::vector<Floor> floors;                // ascending by value
    std::vector<std::vector<double>> ladders; // aligned with floors; rung j = -ln p(j | floor)
    bool overlap = false;
    LadderSource source = LadderSource::ProductThermal;

    // -ln p_ij rebuilt from floors and ladders, indexed [floor level][ladder level].
    std::vector<std::vector<double>> reassemble() const;
};

struct UltraColdReport {
    int cold = 0;
    int hot = 1;
    double beta_c = 0.0;
    double beta_h = 0.0;
    double beta_c_star = 0.0;
    double omega_c_min = 0.0;
    double omega_h_max = 0.0;
    bool no_cooling = false;
    bool limiting_case = false;  // beta_h == 0 or a trivial hot spectrum
    double otto_efficiency_bound = 0.0;
    std::optional<LinearInequality> effective_inequality;
};

struct PolarizationBound {
    int m = 0;
    double E = 0.0;
    double E_plus = kInf;
    double E_minus = -kInf;
    double nu_plus = 0.0;
    double nu_minus = 0.0;
    double nu_formula = 0.0;
    bool formula_applies = false;
    bool overlap = false;
    std::vector<LinearInequality> branches;          // min over branches is the bound
    std::vector<LinearInequality> starred_branches;  // empty unless beta_c >= beta_c*
    double nu_starred = 0.0;

    double slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const;
    std::optional<double> starred_slack(const DensityMatrix& rho0, const DensityMatrix& rhof) const;
};

struct EffectiveBetaReport {
    std::string mode;
    std::map<std::string, double> beta_eff;
    bool validity = false;
    std::vector<std::string> reasons;
    std::vector<std::string> construction_trace;
    std::optional<HermitianOperator> deformed;
    std::optional<LinearInequality> inequality;
};

// Delta<B + xi A> >= 0 as an inequality record.
LinearInequality deformed_inequality(const HermitianOperator& b, const HermitianOperator& a, double xi);

// Pairs whose ordering in `reference` is strict constrain the deformation.
// Without a reference the base operator itself is the reference.
XiThresholds xi_thresholds(const HermitianOperator& b, const HermitianOperator& a,
                           const std::optional<ManifoldPartition>& partition = std::nullopt,
                           const std::optional<HermitianOperator>& reference = std::nullopt);

DeformationBound bound_from_xi(const XiThresholds& t, BoundSense sense);

DeformationCheck validate_deformation(const HermitianOperator& b, const HermitianOperator& btilde,
                                      const DensityMatrix& rho0,
                                      const std::vector<std::pair<int, int>>& allowed_crossings = {});

BspGroups bsp_subspaces(const HermitianOperator& b, const HermitianOperator& a, double xi_critical,
                        const std::optional<ManifoldPartition>& partition = std::nullopt);

// Random mixtures supported on the group subspaces.
BspVerification verify_bsp_equality(const HermitianOperator& b, const HermitianOperator& a, double xi,
                                    const BspGroups& groups, const DensityMatrix& rho0, int trials, Rng& rng);

LaddersDiagram ladders_diagram(const Eigen::MatrixXd& joint, LadderSource source);
LaddersDiagram ladders_diagram(const SetupSpec& setup, int floor_subsystem);

UltraColdReport ultracold_analysis(const SetupSpec& setup);
// Destination map of the swap (c_lo, h_top) <-> (c_lo + omega_c_min, h_bottom).
std::vector<int> ultracold_saturating_swap(const SetupSpec& setup);

PolarizationBound polarization_bound(const SetupSpec& setup, int m);

EffectiveBetaReport effective_betas(const SetupSpec& setup);

// Minimal nonzero gap between distinct sorted levels; 0 when all levels coincide.
double min_gap(const std::vector<double>& levels, double tol = 1e-12);
double spectral_span(const std::vector<double>& levels);

} // namespace pdeform
