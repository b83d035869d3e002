#pragma once

#include <iosfwd>
#include <string>

#include "gcimpute/copula_em.hpp"

namespace gcimpute {

/// Versioned plain-text dump of an online EM state: schedule, update count,
/// correlation and marginal windows. Doubles round-trip exactly.
void save_snapshot(std::ostream& out, const OnlineEmState& state);
OnlineEmState load_snapshot(std::istream& in);

void save_snapshot_file(const std::string& path, const OnlineEmState& state);
OnlineEmState load_snapshot_file(const std::string& path);

}  // namespace gcimpute
