#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdeform/qstate.hpp"

namespace pdeform {

enum class ClusterValue { Mean, Min, Max };

struct CoarseGrainSpec {
    std::vector<int> cluster_of;        // basis index -> cluster position
    std::vector<int> labels;            // cluster position -> user label
    std::vector<double> cluster_values; // q_n
    std::vector<int> sizes;             // M_n
};

struct CoarseGrainResult {
    HermitianOperator op;
    CoarseGrainSpec spec;
};

// A pair of basis indices from different clusters whose B values interleave.
std::optional<std::pair<int, int>> cluster_overlap_witness(const HermitianOperator& b,
                                                           const std::vector<int>& cluster_of);

// B must be diagonal. Overlapping clusters throw ValidationError naming a witness pair.
CoarseGrainResult coarse_grain(const HermitianOperator& b, const std::vector<int>& cluster_of,
                               ClusterValue mode = ClusterValue::Mean);

// B' = -ln p~_n on each cluster, with p~_n the total cluster population of a diagonal state.
HermitianOperator coarse_probability_operator(const DensityMatrix& rho0, const std::vector<int>& cluster_of);

enum class TruncationKind { Truncated, Binary };

struct TruncationSpec {
    int l = 0;
    TruncationKind kind = TruncationKind::Truncated;
    std::vector<int> kept;  // columns of `basis`
    Matrix basis;           // eigenvectors of B, ascending
    HermitianOperator op;
};

TruncationSpec truncated_operator(const HermitianOperator& b, int l);
TruncationSpec binary_operator(const HermitianOperator& b, int l);

struct MajorizationRecord {
    RVector p0_sorted_asc;
    RVector pf_sorted_asc;
    std::vector<std::pair<double, double>> partial_sums;  // (initial, final) for l = 1..N
    std::vector<bool> verdict_per_l;
    bool passed = true;

    // min_l (final partial sum - initial partial sum)
    double min_margin() const;
};

MajorizationRecord majorization_check(const RVector& p0, const RVector& pf, double tol = 1e-12);

enum class Layer { None, CI, Truncated, Binary, Majorization };
std::string layer_name(Layer layer);

struct HierarchyReport {
    double ci_slack = 0.0;
    std::vector<double> truncated_slack;  // l = 1..N
    std::vector<double> binary_slack;     // l = 1..N
    MajorizationRecord majorization;
    bool ci_violated = false;
    bool truncated_violated = false;
    bool binary_violated = false;
    bool majorization_violated = false;
    Layer first_violated = Layer::None;
    // Violations propagate down the chain CI -> truncated -> binary -> majorization.
    bool implication_holds = true;
};

HierarchyReport hierarchy_audit(const DensityMatrix& rho0, const DensityMatrix& rhof, double tol = 1e-9);

} // namespace pdeform
