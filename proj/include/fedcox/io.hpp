#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fedcox/survival.hpp"

namespace fedcox {

/// Reads a dataset CSV: header row, required `time` and `event` columns, every
/// other column a feature in file order. LF and CRLF line endings are both
/// accepted. Errors name the offending row (1-based, header = row 1) and column.
SurvivalDataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
SurvivalDataset load_dataset(const std::string& path);

// Writes `time,event,<features...>` in shortest round-trip form.
void write_dataset(std::ostream& out, const SurvivalDataset& data);
void save_dataset(const std::string& path, const SurvivalDataset& data);

// Shortest-safe decimal form that reads back to the same double.
std::string format_double(double value);

// Minimal CSV table reader used to re-consume emitted result files.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable load_csv(const std::string& path);

}  // namespace fedcox
