#pragma once

#include <stdexcept>
#include <string>

namespace perim {

/// Invalid scenario, configuration, or argument values.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// An optimization-layer failure (infeasible model, numerical breakdown).
class solve_error : public std::runtime_error {
public:
  explicit solve_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace perim
