// Copyright 2026 The faultlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace faultlab {

/// The wildcard glyph used in rendered patterns.
inline constexpr std::string_view kWildcard = "\xE2\x80\xA2";  // U+2022

struct Token {
  enum class Kind : std::uint8_t { Word, Punct, Wildcard };
  Kind kind = Kind::Word;
  std::string text;
  bool space_before = false;
  friend bool operator==(const Token&, const Token&) = default;
};

/// Splits on whitespace; inside a chunk, runs of ASCII letters, digits and
/// '_' are words and every other character (a whole UTF-8 sequence) is its
/// own punctuation token. The wildcard glyph becomes a Wildcard token.
std::vector<Token> tokenize(std::string_view message);

/// Joins tokens, writing a single space where the source had whitespace.
std::string render(const std::vector<Token>& tokens);

/// Case-insensitive word list with optional per-word weights.
class Dictionary {
 public:
  /// One word per line, optionally followed by a weight; '#' starts a comment.
  static Dictionary parse(std::string_view text);

  void add(std::string_view word, double weight = 1.0);
  bool contains(std::string_view word) const;
  double weight(std::string_view word) const;  // 0 for unknown words
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, double> words_;
};

struct Pattern {
  std::vector<Token> tokens;
  std::size_t count = 0;
  std::string text() const { return render(tokens); }
};

/// Dictionary words stay, other words become wildcards, punctuation stays.
Pattern extract_pattern(std::string_view message, const Dictionary& dict);

/// Distinct patterns of a corpus with their counts, in first-seen order.
std::vector<Pattern> mine_patterns(const std::vector<std::string>& messages,
                                   const Dictionary& dict);

/// A wildcard run: consecutive wildcards, including wildcards glued together
/// by punctuation ("•-•", "•,•"), collapses to a single wildcard.
std::vector<Token> collapse(const std::vector<Token>& tokens);

struct MetaPattern {
  std::vector<Token> tokens;
  std::vector<std::string> members;  // rendered member patterns
  std::size_t count = 0;
  double weight = 0;  // highest dictionary weight among its words
  std::string text() const { return render(tokens); }
};

/// Groups patterns by collapsed form, sorted by count descending and then
/// by first appearance.
std::vector<MetaPattern> aggregate(const std::vector<Pattern>& patterns,
                                   const Dictionary* dict = nullptr);

}  // namespace faultlab
