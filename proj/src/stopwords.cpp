// Stopword list used by top_words. Tokens are compared after
// text::tokenize, so entries carry no punctuation ("dont", not "don't").
// Keep the array sorted; bump the version whenever it changes, since
// top_words fixtures depend on it.

#include "topicdpr/text.hpp"

#include <array>

namespace topicdpr::text {

namespace {

constexpr int kVersion = 1;

constexpr std::array<std::string_view, 127> kStopwords = {
    "a",       "about",   "above",  "after",  "again",   "against", "all",    "am",      "an",
    "and",     "any",     "are",    "as",     "at",      "be",      "because", "been",   "before",
    "being",   "below",   "between", "both",  "but",     "by",      "can",    "could",   "did",
    "do",      "does",    "doing",  "dont",   "down",    "during",  "each",   "few",     "for",
    "from",    "further", "had",    "has",    "have",    "having",  "he",     "her",     "here",
    "hers",    "herself", "him",    "himself", "his",    "how",     "i",      "if",      "in",
    "into",    "is",      "it",     "its",    "itself",  "just",    "me",     "more",    "most",
    "my",      "myself",  "no",     "nor",    "not",     "now",     "of",     "off",     "on",
    "once",    "only",    "or",     "other",  "our",     "ours",    "ourselves", "out",  "over",
    "own",     "same",    "she",    "should", "so",      "some",    "such",   "than",    "that",
    "the",     "their",   "theirs", "them",   "themselves", "then", "there",  "these",   "they",
    "this",    "those",   "through", "to",    "too",     "under",   "until",  "up",      "very",
    "was",     "we",      "were",   "what",   "when",    "where",   "which",  "while",   "who",
    "whom",    "why",     "will",   "with",   "would",   "you",     "your",   "yours",   "yourself",
    "yourselves",
};

}  // namespace

std::span<const std::string_view> stopwords() { return kStopwords; }

int stopword_list_version() { return kVersion; }

}  // namespace topicdpr::text
