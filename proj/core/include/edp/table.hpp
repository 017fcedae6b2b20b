#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace edp {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Homogeneous records: every row has one cell per column.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

}  // namespace edp
