#pragma once

#include "topicdpr/types.hpp"

#include <filesystem>
#include <iosfwd>

namespace topicdpr {

// "EMB1" layout, little-endian:
//   magic "EMB1" | u32 dim | u64 count | count x (u32 id_len | id bytes | dim x f32)
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(std::istream& in);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& emb);

/// Rows of `emb` for `ids`, in that order. Throws Error{kUnknownId}.
EmbeddingMatrix select_rows(const EmbeddingMatrix& emb, const std::vector<std::string>& ids);

}  // namespace topicdpr
