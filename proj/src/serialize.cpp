#include "qadv/serialize.hpp"

#include "qadv/errors.hpp"

namespace qadv::io {

json matrix_to_json(const qmat::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

qmat::Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("matrix must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  qmat::Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError("matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (e.is_number()) {
        m(r, c) = qmat::Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = qmat::Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ValidationError("matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

json povm_to_json(const qmat::Povm& povm) {
  json elems = json::array();
  for (const auto& e : povm.elements()) elems.push_back(matrix_to_json(e.matrix()));
  return {{"num_classes", povm.num_classes()}, {"dim", povm.dim()}, {"elements", elems}};
}

qmat::Povm povm_from_json(const json& j) {
  const json& arr = j.is_object() ? j.at("elements") : j;
  if (!arr.is_array()) throw ValidationError("POVM must be an array of matrices");
  std::vector<qmat::HermitianMatrix> elems;
  for (const auto& e : arr) elems.emplace_back(matrix_from_json(e));
  return qmat::validate_povm(std::move(elems));
}

qmat::DensityMatrix density_from_json(const json& j) {
  if (j.is_object()) {
    if (j.contains("bloch")) {
      const auto v = j.at("bloch").get<std::vector<double>>();
      if (v.size() != 3) throw ValidationError("bloch vector needs three components");
      const Eigen::Vector3d r(v[0], v[1], v[2]);
      if (r.norm() > 1.0 + qmat::tol::psd) throw ValidationError("bloch vector longer than 1", r.norm() - 1.0);
      return qmat::qubit::from_bloch(r.norm() > 1.0 ? Eigen::Vector3d(r.normalized()) : r);
    }
    return qmat::validate_density(qmat::HermitianMatrix(matrix_from_json(j.at("matrix"))));
  }
  return qmat::validate_density(qmat::HermitianMatrix(matrix_from_json(j)));
}

json attack_spec_to_json(const attack::AttackSpec& spec) {
  return {{"p", spec.p.to_string()}, {"epsilon", spec.epsilon}, {"solver", attack::to_string(spec.solver)}};
}

json attack_result_to_json(const attack::AttackResult& r) {
  return {{"lambda_star", matrix_to_json(r.lambda_star.matrix())},
          {"loss", r.loss},
          {"gain", r.gain},
          {"solver_used", attack::to_string(r.solver_used)},
          {"feasibility_slack", r.feasibility_slack},
          {"converged", r.converged}};
}

json bound_report_to_json(const bounds::BoundReport& r) {
  return {{"base", r.base},
          {"adversarial_increment", r.adversarial_increment},
          {"total", r.total},
          {"valid", r.valid},
          {"validity_reason", r.validity_reason}};
}

}  // namespace qadv::io
