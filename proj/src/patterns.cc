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

#include "faultlab/patterns.h"

#include <algorithm>
#include <cctype>
#include <map>

namespace faultlab {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }
bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length of the UTF-8 sequence starting with `lead`, clamped to what remains.
std::size_t sequence_length(unsigned char lead, std::size_t remaining) {
  std::size_t n = 1;
  if ((lead & 0xE0) == 0xC0) {
    n = 2;
  } else if ((lead & 0xF0) == 0xE0) {
    n = 3;
  } else if ((lead & 0xF8) == 0xF0) {
    n = 4;
  }
  return std::min(n, remaining);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view message) {
  std::vector<Token> out;
  bool space = false;
  std::size_t i = 0;
  while (i < message.size()) {
    auto c = static_cast<unsigned char>(message[i]);
    if (is_space(c)) {
      space = true;
      ++i;
      continue;
    }
    Token t;
    t.space_before = space && !out.empty();
    space = false;
    if (is_word_char(c)) {
      std::size_t j = i;
      while (j < message.size() && is_word_char(static_cast<unsigned char>(message[j]))) ++j;
      t.kind = Token::Kind::Word;
      t.text = std::string(message.substr(i, j - i));
      i = j;
    } else {
      std::size_t n = sequence_length(c, message.size() - i);
      t.text = std::string(message.substr(i, n));
      t.kind = t.text == kWildcard ? Token::Kind::Wildcard : Token::Kind::Punct;
      i += n;
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string render(const std::vector<Token>& tokens) {
  std::string out;
  for (const Token& t : tokens) {
    if (t.space_before) out += ' ';
    out += t.kind == Token::Kind::Wildcard ? std::string(kWildcard) : t.text;
  }
  return out;
}

Dictionary Dictionary::parse(std::string_view text) {
  Dictionary d;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t b = 0;
    while (b < line.size() && is_space(static_cast<unsigned char>(line[b]))) ++b;
    std::size_t e = b;
    while (e < line.size() && !is_space(static_cast<unsigned char>(line[e]))) ++e;
    if (e == b) continue;
    std::string_view word = line.substr(b, e - b);
    double weight = 1.0;
    std::size_t w = e;
    while (w < line.size() && is_space(static_cast<unsigned char>(line[w]))) ++w;
    if (w < line.size()) {
      std::string rest(line.substr(w));
      try {
        weight = std::stod(rest);
      } catch (const std::exception&) {
        weight = 1.0;
      }
    }
    d.add(word, weight);
  }
  return d;
}

void Dictionary::add(std::string_view word, double weight) {
  // Punctuation never enters the dictionary.
  if (word.empty() ||
      !std::all_of(word.begin(), word.end(),
                   [](char c) { return is_word_char(static_cast<unsigned char>(c)); })) {
    return;
  }
  words_[lower(word)] = weight;
}

bool Dictionary::contains(std::string_view word) const {
  return words_.find(lower(word)) != words_.end();
}

double Dictionary::weight(std::string_view word) const {
  auto it = words_.find(lower(word));
  return it == words_.end() ? 0.0 : it->second;
}

Pattern extract_pattern(std::string_view message, const Dictionary& dict) {
  Pattern p;
  p.count = 1;
  p.tokens = tokenize(message);
  for (Token& t : p.tokens) {
    if (t.kind == Token::Kind::Word && !dict.contains(t.text)) {
      t.kind = Token::Kind::Wildcard;
      t.text = std::string(kWildcard);
    }
  }
  return p;
}

std::vector<Pattern> mine_patterns(const std::vector<std::string>& messages,
                                   const Dictionary& dict) {
  std::vector<Pattern> out;
  std::map<std::string, std::size_t> index;
  for (const std::string& m : messages) {
    Pattern p = extract_pattern(m, dict);
    auto [it, fresh] = index.try_emplace(p.text(), out.size());
    if (fresh) {
      out.push_back(std::move(p));
    } else {
      ++out[it->second].count;
    }
  }
  return out;
}

std::vector<Token> collapse(const std::vector<Token>& tokens) {
  using Kind = Token::Kind;
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i].kind != Kind::Wildcard) {
      out.push_back(tokens[i++]);
      continue;
    }
    out.push_back(tokens[i++]);
    while (i < tokens.size()) {
      if (tokens[i].kind == Kind::Wildcard) {
        ++i;
      } else if (tokens[i].kind == Kind::Punct && !tokens[i].space_before &&
                 i + 1 < tokens.size() && tokens[i + 1].kind == Kind::Wildcard &&
                 !tokens[i + 1].space_before) {
        i += 2;
      } else {
        break;
      }
    }
  }
  return out;
}

std::vector<MetaPattern> aggregate(const std::vector<Pattern>& patterns,
                                   const Dictionary* dict) {
  std::vector<MetaPattern> out;
  std::map<std::string, std::size_t> index;
  for (const Pattern& p : patterns) {
    std::vector<Token> key_tokens = collapse(p.tokens);
    auto [it, fresh] = index.try_emplace(render(key_tokens), out.size());
    if (fresh) {
      MetaPattern m;
      m.tokens = std::move(key_tokens);
      if (dict) {
        for (const Token& t : m.tokens) {
          if (t.kind == Token::Kind::Word) m.weight = std::max(m.weight, dict->weight(t.text));
        }
      }
      out.push_back(std::move(m));
    }
    MetaPattern& m = out[it->second];
    m.members.push_back(p.text());
    m.count += p.count;
  }
  std::stable_sort(out.begin(), out.end(), [](const MetaPattern& a, const MetaPattern& b) {
    return a.count > b.count;
  });
  return out;
}

}  // namespace faultlab
