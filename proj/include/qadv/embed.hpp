#pragma once

// Quantum embedding x -> rho(x) of a scalar feature, class-conditional
// Gaussian data on a quantization grid, and minimum-eigenvalue floors.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <vector>

#include "qadv/qmat.hpp"

namespace qadv::embed {

// rho(x) = (1 - q)|x><x| + q I/d with |x> = R_X(x) Rot_theta R_X(x) |0>.
struct EmbeddingSpec {
  int dim = 2;
  std::array<double, 3> theta{std::numbers::pi / 4, std::numbers::pi / 4, std::numbers::pi / 4};
  double q = 0.05;

  void validate() const;
};

// Labels are 0-based; class c has mean class_means[c] (default (-1)^c) and
// all classes are equiprobable.
struct DataSpec {
  int num_classes = 2;
  std::vector<double> class_means{1.0, -1.0};
  double class_std = 1.0;
  double quant_lo = -6.0;
  double quant_hi = 6.0;
  double quant_step = 0.01;

  void validate() const;
  std::size_t grid_size() const;
  double grid_point(std::size_t i) const { return quant_lo + static_cast<double>(i) * quant_step; }
  // Nearest grid index, clamped to the grid edges.
  std::size_t nearest_index(double x) const;
  double mean(int c) const;
};

struct Sample {
  double x;
  int label;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

// cos|theta| I - i sin|theta| (theta/|theta|) . sigma; identity at theta = 0.
qmat::Matrix rot_gate(const std::array<double, 3>& theta);

qmat::DensityMatrix embed(const EmbeddingSpec& spec, double x);

// Uniform class, Gaussian feature, snapped to the nearest grid point with
// out-of-range draws clamped to the grid edges.
Dataset sample_dataset(const DataSpec& data, std::size_t count, std::uint64_t seed);

struct QuantizedPrior {
  std::vector<double> grid;
  std::vector<std::vector<double>> conditional;  // [class][grid index], P(x | c)
  std::vector<double> marginal;                  // P(x)
  // Joint P(x, c) = P(x | c) / K.
  double joint(std::size_t i, int c) const;
};

QuantizedPrior quantized_prior(const DataSpec& data);

// Embedded state at every grid point, computed once.
class EmbeddedGrid {
 public:
  EmbeddedGrid(const EmbeddingSpec& spec, const DataSpec& data);
  const qmat::DensityMatrix& state(std::size_t i) const { return states_.at(i); }
  const qmat::DensityMatrix& state_at(double x) const { return states_.at(data_.nearest_index(x)); }
  std::size_t size() const noexcept { return states_.size(); }
  const DataSpec& data() const noexcept { return data_; }

 private:
  DataSpec data_;
  std::vector<qmat::DensityMatrix> states_;
};

// Embedded states with their labels, in dataset order.
struct LabelledStates {
  std::vector<qmat::DensityMatrix> states;
  std::vector<int> labels;
  std::size_t size() const noexcept { return states.size(); }
};

LabelledStates embed_dataset(const Dataset& dataset, const EmbeddedGrid& grid);
LabelledStates embed_dataset(const Dataset& dataset, const EmbeddingSpec& spec);

// min over grid points of the smallest eigenvalue of rho(x).
double eigen_floor(const EmbeddingSpec& spec, const DataSpec& data);

// sum_i E_i rho E_i^dagger
qmat::DensityMatrix apply_channel(const std::vector<qmat::Matrix>& kraus, const qmat::DensityMatrix& rho);

// Kraus operators of rho -> (1 - q) rho + q I/2.
std::vector<qmat::Matrix> depolarizing_kraus_qubit(double q);

struct FloorCheckReport {
  bool holds = true;
  std::size_t trials = 0;
  // min over trials of alpha_min(E(rho)) - alpha_min(rho)
  double worst_margin = 0.0;
  std::optional<qmat::DensityMatrix> counterexample;
};

// Checks alpha_min(E(rho)) >= alpha_min(rho) - tol::psd on `trials` random
// full-rank states. Throws ValidationError if the Kraus set is incomplete.
FloorCheckReport channel_floor_check(const std::vector<qmat::Matrix>& kraus, std::size_t trials,
                                     std::uint64_t seed);

// CSV with header `x,c`.
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
// Rejects rows whose x is off the grid or whose label is out of range.
Dataset read_dataset_csv(std::istream& in, const DataSpec& data);

}  // namespace qadv::embed
