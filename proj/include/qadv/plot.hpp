#pragma once

// Log-log SVG of an experiment CSV. The output depends only on the CSV text.

#include <string>
#include <string_view>

namespace qadv::plot {

// Curves: g_clean, g_adv, udb_clean, udb_adv, bound_banchi and the
// adversarial bound (bound_adv where every row is in the valid regime,
// bound_general otherwise). Non-positive values are left out.
// Throws ValidationError if a required column is missing or malformed.
std::string render_svg(std::string_view csv_text);

}  // namespace qadv::plot
