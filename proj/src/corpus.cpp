#include "topicdpr/corpus.hpp"

#include "topicdpr/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace topicdpr {

using nlohmann::json;

namespace {

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kFormat, "line " + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    fail_line(line, std::string("malformed JSON (") + e.what() + ")");
  }
  if (!obj.is_object()) fail_line(line, "expected a JSON object");
  return obj;
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_line(line, std::string("missing field \"") + key + "\"");
  if (!it->is_string()) fail_line(line, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail_line(line, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

Corpus read_corpus(std::istream& in) {
  std::vector<Passage> passages;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    auto obj = parse_line(text, line);
    Passage p{required_string(obj, "id", line), required_string(obj, "page_id", line),
              required_string(obj, "text", line)};
    if (p.id.empty()) fail_line(line, "empty passage id");
    if (p.page_id.empty()) fail_line(line, "empty page_id");
    if (auto [it, fresh] = first_seen.emplace(p.id, line); !fresh) {
      throw Error(ErrorCode::kDuplicateId, "line " + std::to_string(line) + ": duplicate passage id \"" + p.id +
                                               "\" (first seen at line " + std::to_string(it->second) + ")");
    }
    passages.push_back(std::move(p));
  }
  if (passages.empty()) throw Error(ErrorCode::kFormat, "corpus is empty");
  return Corpus(std::move(passages));
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_corpus(in);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_for_write(path);
  for (const auto& p : corpus.passages()) {
    out << json{{"id", p.id}, {"page_id", p.page_id}, {"text", p.text}}.dump() << '\n';
  }
}

std::vector<QueryRecord> read_queries(std::istream& in) {
  std::vector<QueryRecord> queries;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    auto obj = parse_line(text, line);
    QueryRecord q;
    q.id = required_string(obj, "id", line);
    if (q.id.empty()) fail_line(line, "empty query id");
    auto turns = obj.find("turns");
    if (turns == obj.end() || !turns->is_array()) fail_line(line, "field \"turns\" must be an array");
    for (const auto& t : *turns) {
      if (!t.is_object()) fail_line(line, "each turn must be an object");
      q.turns.push_back({required_string(t, "speaker", line), required_string(t, "text", line)});
    }
    if (q.turns.empty()) fail_line(line, "query \"" + q.id + "\" has no turns");
    q.gold_page_id = optional_string(obj, "gold_page_id", line);
    if (auto g = obj.find("gold_passage_ids"); g != obj.end() && !g->is_null()) {
      if (!g->is_array()) fail_line(line, "field \"gold_passage_ids\" must be an array");
      std::vector<std::string> ids;
      for (const auto& id : *g) {
        if (!id.is_string()) fail_line(line, "gold_passage_ids entries must be strings");
        ids.push_back(id.get<std::string>());
      }
      if (ids.empty()) fail_line(line, "gold_passage_ids must be non-empty when present");
      q.gold_passage_ids = std::move(ids);
    }
    q.reference_response = optional_string(obj, "reference_response", line);
    q.candidate_response = optional_string(obj, "candidate_response", line);
    if (auto [it, fresh] = first_seen.emplace(q.id, line); !fresh) {
      throw Error(ErrorCode::kDuplicateId, "line " + std::to_string(line) + ": duplicate query id \"" + q.id + "\"");
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_queries(in);
}

void write_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries) {
  auto out = open_for_write(path);
  for (const auto& q : queries) {
    json turns = json::array();
    for (const auto& t : q.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}});
    json obj{{"id", q.id}, {"turns", std::move(turns)}};
    if (q.gold_page_id) obj["gold_page_id"] = *q.gold_page_id;
    if (q.gold_passage_ids) obj["gold_passage_ids"] = *q.gold_passage_ids;
    if (q.reference_response) obj["reference_response"] = *q.reference_response;
    if (q.candidate_response) obj["candidate_response"] = *q.candidate_response;
    out << obj.dump() << '\n';
  }
}

std::string corpus_hash(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;  // field separator, not valid UTF-8
    h *= 0x100000001b3ULL;
  };
  for (const auto& p : corpus.passages()) {
    feed(p.id);
    feed(p.page_id);
    feed(p.text);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace topicdpr
