#pragma once

#include <eiv/surrogate.hpp>
#include <eiv/types.hpp>

#include <filesystem>
#include <string>

namespace eiv::bench {

/// Matrix file: `# rows=<d1> cols=<d2>` followed by d1 lines of d2
/// comma-separated shortest round-trip decimals.
void write_matrix(const std::filesystem::path& path, const Matrix<double>& m);
Matrix<double> read_matrix(const std::filesystem::path& path);

/// Mask file in the matrix format with entries 0 (observed) or 1 (missing).
void write_mask(const std::filesystem::path& path, const MissingMask& mask);
MissingMask read_mask(const std::filesystem::path& path);

/// Truncates and writes; throws IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace eiv::bench
