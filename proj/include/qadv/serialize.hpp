#pragma once

// JSON forms of matrices, states, POVMs and reports. Complex entries are
// [re, im] pairs; matrices are row-major arrays of rows.

#include <json.hpp>

#include "qadv/attack.hpp"
#include "qadv/bounds.hpp"
#include "qadv/qmat.hpp"

namespace qadv::io {

using nlohmann::json;

json matrix_to_json(const qmat::Matrix& m);
// Accepts complex [re, im] pairs or plain real numbers as entries.
qmat::Matrix matrix_from_json(const json& j);

json povm_to_json(const qmat::Povm& povm);
// {"elements": [...]} or a bare array of matrices.
qmat::Povm povm_from_json(const json& j);

// A matrix, {"matrix": ...}, or {"bloch": [x, y, z]} for qubits.
qmat::DensityMatrix density_from_json(const json& j);

json attack_spec_to_json(const attack::AttackSpec& spec);
json attack_result_to_json(const attack::AttackResult& r);
json bound_report_to_json(const bounds::BoundReport& r);

}  // namespace qadv::io
