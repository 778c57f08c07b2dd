#include "topicdpr/embeddings.hpp"

#include "topicdpr/binary_io.hpp"
#include "topicdpr/error.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <unordered_set>

namespace topicdpr {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kMaxIdBytes = 1u << 16;

[[noreturn]] void truncated(std::uint64_t rows_read) {
  throw Error(ErrorCode::kFormat, "unexpected end of file after row " + std::to_string(rows_read));
}

}  // namespace

EmbeddingMatrix read_embeddings(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw Error(ErrorCode::kFormat, "bad magic: expected \"EMB1\"");
  }
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  if (!binary::read_le(in, dim) || !binary::read_le(in, count)) {
    throw Error(ErrorCode::kFormat, "unexpected end of file in header");
  }
  if (dim == 0) throw Error(ErrorCode::kFormat, "dim must be positive");

  std::vector<std::string> ids;
  std::vector<float> values;
  std::unordered_set<std::string> seen;
  for (std::uint64_t row = 0; row < count; ++row) {
    std::uint32_t id_len = 0;
    if (!binary::read_le(in, id_len)) truncated(row);
    if (id_len > kMaxIdBytes) {
      throw Error(ErrorCode::kFormat, "row " + std::to_string(row) + ": id length " + std::to_string(id_len) +
                                          " exceeds " + std::to_string(kMaxIdBytes));
    }
    std::string id(id_len, '\0');
    if (id_len > 0 && !in.read(id.data(), id_len)) truncated(row);
    for (std::uint32_t c = 0; c < dim; ++c) {
      float v = 0.0f;
      if (!binary::read_le(in, v)) truncated(row);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kFormat, "non-finite value at row " + std::to_string(row) + ", column " +
                                            std::to_string(c));
      }
      values.push_back(v);
    }
    if (!seen.insert(id).second) throw Error(ErrorCode::kDuplicateId, "duplicate embedding id \"" + id + "\"");
    ids.push_back(std::move(id));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormat, "declared count " + std::to_string(count) +
                                        " inconsistent with file length: trailing bytes after row " +
                                        std::to_string(count));
  }
  RowMatrixXf vectors = Eigen::Map<const RowMatrixXf>(values.data(), static_cast<Eigen::Index>(count), dim);
  return EmbeddingMatrix(std::move(ids), std::move(vectors));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& emb) {
  out.write(kMagic, 4);
  binary::write_le(out, static_cast<std::uint32_t>(emb.dim()));
  binary::write_le(out, static_cast<std::uint64_t>(emb.count()));
  for (Eigen::Index r = 0; r < emb.count(); ++r) {
    const auto& id = emb.ids()[static_cast<std::size_t>(r)];
    binary::write_le(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (Eigen::Index c = 0; c < emb.dim(); ++c) binary::write_le(out, emb.vectors()(r, c));
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_embeddings(out, emb);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

EmbeddingMatrix select_rows(const EmbeddingMatrix& emb, const std::vector<std::string>& ids) {
  RowMatrixXf rows(static_cast<Eigen::Index>(ids.size()), emb.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto r = emb.find(ids[i]);
    if (!r) throw Error(ErrorCode::kUnknownId, "no embedding for id \"" + ids[i] + "\"");
    rows.row(static_cast<Eigen::Index>(i)) = emb.row(*r);
  }
  return EmbeddingMatrix(ids, std::move(rows));
}

}  // namespace topicdpr
