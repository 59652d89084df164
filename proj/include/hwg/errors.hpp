#pragma once

#include <stdexcept>
#include <string>

namespace hwg {

// Thrown when inputs violate an operation's preconditions.
class invalid_argument : public std::invalid_argument {
public:
    explicit invalid_argument(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when an instance exceeds a documented size cap.
class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Geodesic evaluation on a non-tree graph found several tied shortest paths.
// Ties are refused rather than broken: downstream plan bookkeeping depends on
// which geodesic carried the mass.
class ambiguous_geodesic : public std::runtime_error {
public:
    ambiguous_geodesic(const std::string& what, int tied_paths)
        : std::runtime_error(what), tied_path_count(tied_paths) {}
    int tied_path_count;
};

// Mirror-descent signal reconstruction produced a negative entry.
class admissibility_error : public std::runtime_error {
public:
    admissibility_error(const std::string& what, int row, int col, double min_t)
        : std::runtime_error(what), i(row), j(col), min_admissible_t(min_t) {}
    int i;
    int j;
    double min_admissible_t;
};

} // namespace hwg
