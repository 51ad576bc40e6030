#pragma once

// Seeded randomness. Every stochastic routine takes an explicit seed; work
// items derive their own substream seed from (base seed, stream tag, index)
// so results do not depend on scheduling.

#include <cstdint>
#include <random>
#include <vector>

#include "qadv/qmat.hpp"

namespace qadv::rng {

using Engine = std::mt19937_64;

// Stream tags used by the library. Adding a tag never changes existing
// streams.
enum class Stream : std::uint64_t {
  dataset = 1,
  sigma = 2,
  rademacher_dataset = 3,
  multistart = 4,
  restart = 5,
  training_data = 6,
  property = 7,
};

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t x) noexcept;

// Seed of work item `index` in `stream`: mix(mix(base + tag) + index).
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) noexcept;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// i.i.d. standard complex Gaussian entries (real and imaginary parts N(0, 1/2)).
qmat::Matrix complex_gaussian(int rows, int cols, Engine& engine);

// G G^dagger / Tr(G G^dagger) with complex Gaussian G (d x d).
qmat::DensityMatrix random_density(int d, Engine& engine);

// Haar-distributed unitary via QR with the diagonal phases of R removed.
qmat::Matrix random_unitary(int d, Engine& engine);

// Random Hermitian matrix (G + G^dagger)/2.
qmat::HermitianMatrix random_hermitian(int d, Engine& engine);

// Kraus operators E_0..E_{k-1} (each d x d) taken as row blocks of an
// isometry V ((k d) x d) obtained from the QR of a complex Gaussian matrix,
// so that sum_i E_i^dagger E_i = V^dagger V = I.
std::vector<qmat::Matrix> random_kraus(int d, int num_ops, Engine& engine);

}  // namespace qadv::rng
