#include "fedcox/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fedcox {

namespace {

std::vector<std::string> split_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& raw, const std::string& where) {
    const std::string text = trim(raw);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw InputError("non-numeric value '" + text + "' at " + where);
    }
    if (!std::isfinite(value)) throw InputError("non-finite value '" + text + "' at " + where);
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

SurvivalDataset parse_dataset(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(source + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = split_line(line);
    for (auto& name : header) name = trim(name);

    auto find = [&](const std::string& name) -> long {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : std::distance(header.begin(), it);
    };
    const long time_col = find("time");
    const long event_col = find("event");
    if (time_col < 0) throw InputError(source + ": missing column: time");
    if (event_col < 0) throw InputError(source + ": missing column: event");

    SurvivalDataset data;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<long>(c) == time_col || static_cast<long>(c) == event_col) continue;
        if (header[c].empty()) throw InputError(source + ": empty column name at column " +
                                                std::to_string(c + 1));
        feature_cols.push_back(c);
        data.feature_names.push_back(header[c]);
    }

    std::vector<double> values;
    std::vector<double> times;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw InputError(source + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        auto where = [&](std::size_t c) {
            return source + " row " + std::to_string(row) + ", column '" + header[c] + "'";
        };
        const double t = parse_number(cells[static_cast<std::size_t>(time_col)],
                                      where(static_cast<std::size_t>(time_col)));
        if (t < 0.0) throw InputError("negative time at " + where(static_cast<std::size_t>(time_col)));
        const double e = parse_number(cells[static_cast<std::size_t>(event_col)],
                                      where(static_cast<std::size_t>(event_col)));
        if (e != 0.0 && e != 1.0) {
            throw InputError("event must be 0 or 1 at " + where(static_cast<std::size_t>(event_col)));
        }
        times.push_back(t);
        data.event.push_back(e == 1.0 ? 1 : 0);
        for (std::size_t c : feature_cols) values.push_back(parse_number(cells[c], where(c)));
    }

    const auto n = static_cast<Eigen::Index>(times.size());
    const auto p = static_cast<Eigen::Index>(feature_cols.size());
    data.time = Eigen::Map<const Eigen::VectorXd>(times.data(), n);
    data.covariates =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            values.data(), n, p);
    data.validate();
    return data;
}

SurvivalDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return parse_dataset(in, path);
}

void write_dataset(std::ostream& out, const SurvivalDataset& data) {
    out << "time,event";
    for (const auto& name : data.feature_names) out << ',' << name;
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out << format_double(data.time[i]) << ',' << int(data.event[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < data.features(); ++j) {
            out << ',' << format_double(data.covariates(i, j));
        }
        out << '\n';
    }
}

void save_dataset(const std::string& path, const SurvivalDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    write_dataset(out, data);
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("missing column: " + name);
    return static_cast<std::size_t>(std::distance(header.begin(), it));
}

CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty CSV");
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) throw InputError("ragged CSV row: " + line);
        table.rows.push_back(std::move(cells));
    }
    return table;
}

CsvTable load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return parse_csv(in);
}

}  // namespace fedcox
