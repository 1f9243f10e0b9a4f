#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ppde/diffusion.hpp"
#include "ppde/path.hpp"

namespace ppde {

/// CSV with header: one row per grid node, columns t, x_1, ..., x_d.
void write_path_csv(const DiscretePath& x, std::ostream& os);
DiscretePath read_path_csv(std::istream& is);
void write_path_csv_file(const DiscretePath& x, const std::string& filename);
DiscretePath read_path_csv_file(const std::string& filename);

/// JSON array form: {"t": [...], "values": [[x_1..x_d] per node]}.
nlohmann::json path_to_json(const DiscretePath& x);
DiscretePath path_from_json(const nlohmann::json& j);

/// Long-format ensemble table with header path_id, t, x_1, ..., x_d.
void write_ensemble_csv(const Ensemble& ens, std::ostream& os);
void write_ensemble_csv_file(const Ensemble& ens, const std::string& filename);

}  // namespace ppde
