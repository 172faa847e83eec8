#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pdeform/qstate.hpp"

namespace pdeform {

using Rng = std::mt19937_64;

// Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix.
Matrix haar_unitary(int dim, Rng& rng);

// Haar unitary acting independently inside each block (identity elsewhere).
Matrix block_haar_unitary(int dim, const std::vector<std::vector<int>>& blocks, Rng& rng);

Matrix permutation_unitary(const std::vector<int>& destination);

// Random mixture with `terms` Haar unitaries and Dirichlet(1) weights.
MixtureOfUnitaries random_mixture(int dim, int terms, Rng& rng);
MixtureOfUnitaries random_block_mixture(int dim, const std::vector<std::vector<int>>& blocks, int terms, Rng& rng);

// Uniform point of the probability simplex.
RVector random_probabilities(int dim, Rng& rng);
std::vector<int> random_permutation(int dim, Rng& rng);

} // namespace pdeform
