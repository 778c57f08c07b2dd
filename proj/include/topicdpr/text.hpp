#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topicdpr::text {

/// Lowercases ASCII letters, deletes ASCII punctuation and splits on
/// whitespace. Bytes >= 0x80 are kept verbatim, so UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view input);

/// Built-in English stopword list (see stopwords.cpp for the version).
bool is_stopword(std::string_view token);
std::span<const std::string_view> stopwords();
int stopword_list_version();

}  // namespace topicdpr::text
