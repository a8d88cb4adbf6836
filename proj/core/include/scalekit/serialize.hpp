#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scalekit/model_ir.hpp"

namespace scalekit {

inline constexpr std::string_view kSpecSchema = "scalekit/1";

// Model-spec documents are JSON objects with the keys
//   schema, name, input_resolution, stem, stages, head
// in that order. `stem` and `head` may be null. Output is canonical: the same
// network always serializes to the same bytes.

std::string serialize(const NetworkSpec& spec);
std::string serialize(const ContinuousNetwork& spec);

/// Throws ParseError (with line/column or field path) on malformed input and
/// SchemaError on unknown schema versions or block kinds. Dimension fields
/// must hold integral values.
NetworkSpec deserialize(std::string_view document);

/// Accepts both discrete and continuous documents.
ContinuousNetwork deserialize_continuous(std::string_view document);

/// True when every scalable dimension in the document is integral.
bool document_is_discrete(std::string_view document);

NetworkSpec read_spec_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace scalekit
