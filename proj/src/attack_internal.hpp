#pragma once

#include "qadv/attack.hpp"

namespace qadv::attack {

// Loss, gain and slack of a candidate state.
AttackResult make_result(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho,
                         qmat::DensityMatrix lambda, qmat::SchattenOrder p, double epsilon, Solver used);

}  // namespace qadv::attack
