#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdeform/qstate.hpp"

namespace pdeform {

struct ManifoldPartition {
    std::vector<std::vector<int>> blocks;
    std::string description;

    // Throws ValidationError unless the blocks are disjoint and cover 0..dim-1.
    void validate(int dim) const;
    std::vector<int> block_of(int dim) const;
};

struct SubsystemSpec {
    enum class Init { Thermal, PassivePopulations };

    std::string label;
    std::vector<double> energy_levels;
    Init init = Init::Thermal;
    double beta = 0.0;
    std::vector<double> populations;
    // Thermal with respect to this operator instead of the energy operator.
    std::optional<Matrix> init_generator;

    int dim() const { return static_cast<int>(energy_levels.size()); }
};

struct TransitionFactor {
    int subsystem = 0;
    int ket = 0;
    int bra = 0;
};

struct InteractionSpec {
    enum class Kind { Transitions, FlipFlop, Dephasing, Custom };

    std::string name;
    Kind kind = Kind::Custom;
    double strength = 1.0;
    // transitions: sum of products of |ket><bra| factors, plus h.c.
    std::vector<std::vector<TransitionFactor>> terms;
    bool add_conjugate = true;
    // flip-flop: sum_{i>j} w_i w_j (s+_i s-_j + h.c.) over two-level subsystems
    std::vector<int> spins;
    std::vector<double> weights;
    // dephasing: sum_j gamma_j H_system (x) H_j
    int system = -1;
    std::vector<int> bath;
    std::vector<double> gammas;
    Matrix custom;
};

struct ObservableSpec {
    enum class Kind { LocalDiagonal, LocalHamiltonian, LocalMatrix, Projector, Custom };

    std::string name;
    Kind kind = Kind::Custom;
    int subsystem = -1;
    std::vector<double> values;
    double scale = 1.0;
    std::vector<std::vector<int>> states;  // multi-indices over `support`
    std::vector<int> support;              // empty: all subsystems
    Matrix custom;                         // local matrix or full matrix
};

struct DemonSpec {
    // measured basis state -> replacement basis state (multi-indices)
    std::vector<std::pair<std::vector<int>, std::vector<int>>> replacements;
    double p = 1.0;
};

struct PreEvolutionSpec {
    std::vector<std::string> interactions;
    double time = 1.0;
};

struct SetupSpec {
    int schema_version = 1;
    std::string name;
    std::vector<SubsystemSpec> subsystems;
    std::optional<std::vector<double>> correlations;  // joint diagonal populations
    std::vector<InteractionSpec> interactions;
    std::map<std::string, ManifoldPartition> partitions;
    std::vector<ObservableSpec> observables;
    std::optional<PreEvolutionSpec> pre_evolution;
    std::optional<DemonSpec> demon;
    std::map<std::string, double> parameters;
    std::vector<std::string> simulate;  // optional reduced subsystem list
    std::string notes;
};

struct BuildBResult {
    HermitianOperator full;     // -ln rho0
    HermitianOperator reduced;  // full without the identity shift
    double log_partition = 0.0;
    bool product_thermal = false;
    std::size_t clamped = 0;
};

std::vector<int> subsystem_dims(const SetupSpec& spec);
int total_dim(const SetupSpec& spec, std::size_t cap = kDefaultDimCap);
int subsystem_index(const SetupSpec& spec, const std::string& label);
int flat_index(const SetupSpec& spec, const std::vector<int>& multi);
std::vector<int> multi_index(const SetupSpec& spec, int flat);

// Checks every SetupSpec invariant; throws ValidationError naming the culprit.
void validate_setup(const SetupSpec& spec);

HermitianOperator local_hamiltonian(const SetupSpec& spec, int k);
HermitianOperator total_hamiltonian(const SetupSpec& spec);
HermitianOperator local_operator(const SetupSpec& spec, int k, const Matrix& local);
RVector local_initial_populations(const SubsystemSpec& s);
DensityMatrix initial_state(const SetupSpec& spec);
BuildBResult build_B(const SetupSpec& spec, ZeroPopulationPolicy policy = ZeroPopulationPolicy::Reject);

HermitianOperator interaction_hamiltonian(const SetupSpec& spec, const std::string& name);
HermitianOperator observable(const SetupSpec& spec, const std::string& name);
const ManifoldPartition& partition(const SetupSpec& spec, const std::string& name);
// Connected components of the coupling graph of an operator in the computational basis.
ManifoldPartition connected_components(const HermitianOperator& op, std::string description = {});

// Keeps only the listed subsystems (in the given order); requires a product initial state.
SetupSpec restrict_setup(const SetupSpec& spec, const std::vector<std::string>& labels);

// Thermal beta of subsystem k; throws unless it is thermal w.r.t. its energy.
double thermal_beta(const SetupSpec& spec, int k);

} // namespace pdeform
