// JSON file format for factored MDPs. The document carries the component
// layout plus one object per transition and reward factor; scopes are written
// 1-based, table keys are comma-joined 0-based scoped component values in
// scope order.
#pragma once

#include <string>

#include "frl/factored.hpp"

namespace frl {

std::string fmdp_to_json(const FactoredMdp& mdp);
FactoredMdp fmdp_from_json(const std::string& text);

void save_fmdp(const FactoredMdp& mdp, const std::string& path);
FactoredMdp load_fmdp(const std::string& path);

}  // namespace frl
