#pragma once

/// @file field_io.hpp
/// @brief Bit-exact field files: one JSON header line, then raw little-endian
/// doubles (complex as interleaved re,im), x⁴ index fastest, components
/// innermost.

#include <string>
#include <vector>

#include "ampere/grid.hpp"

namespace ampere {

struct FieldHeader {
    std::string kind;  ///< "scalar", "form" or "measure"
    Index4 shape{};
    Box4 bbox{};
    Bidegree bidegree;
    int components = 1;
    int degree = 0;  ///< forms only
};

void save_field(const ScalarField& f, const std::string& path);
void save_field(const FormField& f, const std::string& path);
/// Also writes the validity mask to `path + ".mask"` as a scalar field file.
void save_field(const MeasureField& f, const std::string& path);

/// Multi-component real field (e.g. the 16 entries of J per node).
void save_components(const DomainPtr& d, const std::vector<double>& values, int components, const std::string& path);

/// Reads only the header line. Throws "bad header".
FieldHeader read_header(const std::string& path);

/// Loaders rebuild a box domain from the header (no defining function) unless
/// `domain` is given, in which case shapes must agree ("shape mismatch").
ScalarField load_scalar(const std::string& path, DomainPtr domain = nullptr);
FormField load_form(const std::string& path, DomainPtr domain = nullptr);
MeasureField load_measure(const std::string& path, DomainPtr domain = nullptr);
std::vector<double> load_components(const std::string& path, int& components, DomainPtr domain = nullptr);

}  // namespace ampere
