#include "qadv/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qadv/errors.hpp"
#include "qadv/random.hpp"

namespace qadv::embed {

using qmat::Complex;
using qmat::Matrix;

void EmbeddingSpec::validate() const {
  if (dim != 2) throw ValidationError("the rotation-circuit embedding is defined for d = 2 only");
  if (!(q >= 0.0 && q < 1.0)) throw ValidationError("depolarization strength must satisfy 0 <= q < 1");
  for (double t : theta) {
    if (!std::isfinite(t)) throw ValidationError("rotation angles must be finite");
  }
}

void DataSpec::validate() const {
  if (num_classes < 2) throw ValidationError("need at least two classes");
  if (static_cast<int>(class_means.size()) != num_classes) {
    throw ValidationError("class_means must list one mean per class");
  }
  if (!(class_std > 0.0)) throw ValidationError("class_std must be positive");
  if (!(quant_lo < quant_hi)) throw ValidationError("quantization grid needs quant_lo < quant_hi");
  if (!(quant_step > 0.0)) throw ValidationError("quantization step must be positive");
}

std::size_t DataSpec::grid_size() const {
  return static_cast<std::size_t>(std::floor((quant_hi - quant_lo) / quant_step + 1e-9)) + 1;
}

std::size_t DataSpec::nearest_index(double x) const {
  const double k = std::round((x - quant_lo) / quant_step);
  if (!(k > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(k), grid_size() - 1);
}

double DataSpec::mean(int c) const { return class_means.at(static_cast<std::size_t>(c)); }

Matrix rot_gate(const std::array<double, 3>& theta) {
  const double norm = std::sqrt(theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]);
  Matrix u = Matrix::Identity(2, 2);
  if (norm == 0.0) return u;
  const Matrix axis =
      (theta[0] * qmat::pauli::x() + theta[1] * qmat::pauli::y() + theta[2] * qmat::pauli::z()) / norm;
  return std::cos(norm) * u - Complex(0.0, std::sin(norm)) * axis;
}

qmat::DensityMatrix embed(const EmbeddingSpec& spec, double x) {
  spec.validate();
  const Matrix rx = rot_gate({x, 0.0, 0.0});
  qmat::Vector ket = qmat::Vector::Zero(2);
  ket(0) = 1.0;
  ket = rx * rot_gate(spec.theta) * rx * ket;
  const Matrix mixed = (1.0 - spec.q) * ket * ket.adjoint() + spec.q * Matrix::Identity(2, 2) / 2.0;
  return qmat::validate_density(qmat::HermitianMatrix(mixed));
}

Dataset sample_dataset(const DataSpec& data, std::size_t count, std::uint64_t seed) {
  data.validate();
  auto engine = rng::make_engine(seed);
  std::uniform_int_distribution<int> pick_class(0, data.num_classes - 1);
  std::normal_distribution<double> noise(0.0, data.class_std);
  Dataset out;
  out.samples.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const int c = pick_class(engine);
    const double raw = data.mean(c) + noise(engine);
    out.samples.push_back({data.grid_point(data.nearest_index(raw)), c});
  }
  return out;
}

double QuantizedPrior::joint(std::size_t i, int c) const {
  return conditional.at(static_cast<std::size_t>(c)).at(i) / static_cast<double>(conditional.size());
}

QuantizedPrior quantized_prior(const DataSpec& data) {
  data.validate();
  const std::size_t n = data.grid_size();
  QuantizedPrior prior;
  prior.grid.resize(n);
  for (std::size_t i = 0; i < n; ++i) prior.grid[i] = data.grid_point(i);
  prior.conditional.assign(static_cast<std::size_t>(data.num_classes), std::vector<double>(n, 0.0));
  prior.marginal.assign(n, 0.0);
  for (int c = 0; c < data.num_classes; ++c) {
    auto& row = prior.conditional[static_cast<std::size_t>(c)];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (prior.grid[i] - data.mean(c)) / data.class_std;
      row[i] = std::exp(-0.5 * z * z);
      total += row[i];
    }
    for (double& v : row) v /= total;
    for (std::size_t i = 0; i < n; ++i) prior.marginal[i] += row[i] / static_cast<double>(data.num_classes);
  }
  return prior;
}

EmbeddedGrid::EmbeddedGrid(const EmbeddingSpec& spec, const DataSpec& data) : data_(data) {
  data.validate();
  const std::size_t n = data.grid_size();
  states_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) states_.push_back(embed(spec, data.grid_point(i)));
}

LabelledStates embed_dataset(const Dataset& dataset, const EmbeddedGrid& grid) {
  LabelledStates out;
  out.states.reserve(dataset.size());
  out.labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    out.states.push_back(grid.state_at(s.x));
    out.labels.push_back(s.label);
  }
  return out;
}

LabelledStates embed_dataset(const Dataset& dataset, const EmbeddingSpec& spec) {
  LabelledStates out;
  out.states.reserve(dataset.size());
  out.labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    out.states.push_back(embed(spec, s.x));
    out.labels.push_back(s.label);
  }
  return out;
}

double eigen_floor(const EmbeddingSpec& spec, const DataSpec& data) {
  const EmbeddedGrid grid(spec, data);
  double floor = 1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) floor = std::min(floor, qmat::min_eigenvalue(grid.state(i)));
  return floor;
}

qmat::DensityMatrix apply_channel(const std::vector<Matrix>& kraus, const qmat::DensityMatrix& rho) {
  Matrix out = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& e : kraus) out += e * rho.matrix() * e.adjoint();
  return qmat::validate_density(qmat::HermitianMatrix(out, 1e-9));
}

std::vector<Matrix> depolarizing_kraus_qubit(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("depolarizing strength must lie in [0, 1]");
  return {std::sqrt(1.0 - 3.0 * q / 4.0) * Matrix(Matrix::Identity(2, 2)), std::sqrt(q / 4.0) * qmat::pauli::x(),
          std::sqrt(q / 4.0) * qmat::pauli::y(), std::sqrt(q / 4.0) * qmat::pauli::z()};
}

FloorCheckReport channel_floor_check(const std::vector<Matrix>& kraus, std::size_t trials, std::uint64_t seed) {
  if (kraus.empty()) throw ValidationError("Kraus set is empty");
  const Eigen::Index d = kraus.front().cols();
  Matrix completeness = Matrix::Zero(d, d);
  for (const auto& e : kraus) {
    if (e.rows() != d || e.cols() != d) throw ValidationError("Kraus operators must be square and equal-sized");
    completeness += e.adjoint() * e;
  }
  const double incompleteness = (completeness - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (incompleteness > qmat::tol::unitary) {
    throw ValidationError("Kraus set is not trace preserving", incompleteness);
  }

  FloorCheckReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  auto engine = rng::make_engine(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto rho = rng::random_density(static_cast<int>(d), engine);
    const double margin = qmat::min_eigenvalue(apply_channel(kraus, rho)) - qmat::min_eigenvalue(rho);
    if (margin < report.worst_margin) report.worst_margin = margin;
    if (margin < -qmat::tol::psd && report.holds) {
      report.holds = false;
      report.counterexample = rho;
    }
  }
  if (trials == 0) report.worst_margin = 0.0;
  return report;
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << "x,c\n";
  char buf[64];
  for (const auto& s : dataset.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.x);
    out << buf << ',' << s.label << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, const DataSpec& data) {
  data.validate();
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,c") throw ValidationError("dataset CSV must start with header 'x,c'");
  Dataset out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("dataset CSV row " + std::to_string(row) + " lacks a comma");
    double x = 0.0;
    int c = 0;
    try {
      x = std::stod(line.substr(0, comma));
      c = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError("dataset CSV row " + std::to_string(row) + " is not numeric");
    }
    const double off_grid = std::abs(x - data.grid_point(data.nearest_index(x)));
    if (off_grid > 1e-9 * std::max(1.0, std::abs(x))) {
      throw ValidationError("dataset CSV row " + std::to_string(row) + ": x is not on the quantization grid",
                            off_grid);
    }
    if (c < 0 || c >= data.num_classes) {
      throw ValidationError("dataset CSV row " + std::to_string(row) + ": label out of range");
    }
    out.samples.push_back({data.grid_point(data.nearest_index(x)), c});
  }
  return out;
}

}  // namespace qadv::embed
