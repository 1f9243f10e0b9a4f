#include "ppde/serialization.hpp"

#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace ppde {

namespace {

void write_header(std::ostream& os, int dim, bool with_path_id) {
    if (with_path_id) os << "path_id,";
    os << "t";
    for (int i = 1; i <= dim; ++i) os << ",x_" << i;
    os << "\n";
}

}  // namespace

void write_path_csv(const DiscretePath& x, std::ostream& os) {
    os << std::setprecision(17);
    write_header(os, x.dim(), false);
    for (std::size_t k = 0; k < x.grid().node_count(); ++k) {
        os << x.grid().node(k);
        for (int i = 0; i < x.dim(); ++i) os << ',' << x.at(k, i);
        os << "\n";
    }
}

DiscretePath read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("path csv: empty input");
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) throw std::invalid_argument("path csv: row with fewer than 2 columns");
        times.push_back(row.front());
        rows.push_back(std::vector<double>(row.begin() + 1, row.end()));
    }
    if (rows.empty()) throw std::invalid_argument("path csv: no data rows");
    const std::size_t dim = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != dim) throw std::invalid_argument("path csv: ragged rows");
    std::vector<double> values;
    values.reserve(rows.size() * dim);
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    return DiscretePath(TimeGrid::from_nodes(std::move(times)), static_cast<int>(dim),
                        std::move(values));
}

void write_path_csv_file(const DiscretePath& x, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename + " for writing");
    write_path_csv(x, os);
}

DiscretePath read_path_csv_file(const std::string& filename) {
    std::ifstream is(filename);
    if (!is) throw std::runtime_error("cannot open " + filename);
    return read_path_csv(is);
}

nlohmann::json path_to_json(const DiscretePath& x) {
    nlohmann::json j;
    j["t"] = x.grid().nodes();
    nlohmann::json values = nlohmann::json::array();
    for (std::size_t k = 0; k < x.grid().node_count(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < x.dim(); ++i) row.push_back(x.at(k, i));
        values.push_back(std::move(row));
    }
    j["values"] = std::move(values);
    return j;
}

DiscretePath path_from_json(const nlohmann::json& j) {
    const auto times = j.at("t").get<std::vector<double>>();
    const auto& rows = j.at("values");
    if (!rows.is_array() || rows.size() != times.size())
        throw std::invalid_argument("path json: 't' and 'values' must have equal length");
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    std::vector<double> values;
    values.reserve(times.size() * dim);
    for (const auto& row : rows) {
        if (row.size() != dim) throw std::invalid_argument("path json: ragged value rows");
        for (const auto& v : row) values.push_back(v.get<double>());
    }
    return DiscretePath(TimeGrid::from_nodes(times), static_cast<int>(dim), std::move(values));
}

void write_ensemble_csv(const Ensemble& ens, std::ostream& os) {
    os << std::setprecision(17);
    write_header(os, ens.dim(), true);
    for (std::size_t p = 0; p < ens.size(); ++p)
        for (std::size_t k = 0; k < ens.grid().node_count(); ++k) {
            os << p << ',' << ens.grid().node(k);
            for (int i = 0; i < ens.dim(); ++i) os << ',' << ens.view(p).coord(k, i);
            os << "\n";
        }
}

void write_ensemble_csv_file(const Ensemble& ens, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename + " for writing");
    write_ensemble_csv(ens, os);
}

}  // namespace ppde
