#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "subtask_forge/domains.hpp"
#include "subtask_forge/factorize.hpp"
#include "subtask_forge/lmdp.hpp"

namespace subtask_forge::io {

using Json = nlohmann::ordered_json;

/// Lmdp JSON: {n_interior, n_boundary, labels?, lambda, r_interior,
/// P_ii: {triplets: [[row, col, val], ...]}, P_bi: {triplets: ...}} with
/// triplets sorted by (col, row). When `domain` is given it is stored under
/// "domain" so geometry can be regenerated.
Json lmdp_to_json(const Lmdp& lmdp, const DomainSpec* domain = nullptr);
Lmdp lmdp_from_json(const Json& j);
/// The "domain" member of an Lmdp document, if any.
std::optional<DomainSpec> embedded_domain(const Json& j);

/// Domain-spec JSON: {"type": "rooms"|"taxi"|"ring", "params": {...},
/// "r_step": -0.03, "lambda": 1.0, "twin_weight": 0.5}. Errors name the field.
DomainSpec domain_spec_from_json(const Json& j);
Json domain_spec_to_json(const DomainSpec& spec);

/// Matrix CSV: "rows,cols" header, then one comma-separated line per row in
/// shortest round-trip decimal form.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

/// D.csv, W.csv and meta.json.
void write_factorization(const std::filesystem::path& dir, const Factorization& f);
Factorization read_factorization(const std::filesystem::path& dir);
Json factorization_meta(const Factorization& f);

std::string sha256_hex(std::string_view data);

}  // namespace subtask_forge::io
