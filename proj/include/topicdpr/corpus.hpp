#pragma once

#include "topicdpr/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace topicdpr {

// JSON Lines readers. Errors carry the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
std::vector<QueryRecord> read_queries(std::istream& in);
void write_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries);

/// FNV-1a over (id, page_id, text) of every passage in order, as 16 hex digits.
std::string corpus_hash(const Corpus& corpus);

}  // namespace topicdpr
