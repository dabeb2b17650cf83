#pragma once

#include "amdyn/saddle/solve.hpp"

#include "json.hpp"

#include <string>

namespace amdyn {

/// Theory output document. Triangular stores are written as row-major lower-triangular
/// arrays: (1,1), (2,1), (2,2), (3,1), ... where (t,s) holds X^{st}.
nlohmann::json theory_to_json(const SolveResult& result);

/// Inverse of theory_to_json. Throws ContractViolation on a malformed document.
SolveResult theory_from_json(const nlohmann::json& doc);

/// Writes the document atomically (temporary file, then rename).
void write_theory(const SolveResult& result, const std::string& path);
SolveResult read_theory(const std::string& path);

/// Writes `text` to `path` through a temporary file in the same directory.
void write_file_atomic(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace amdyn
