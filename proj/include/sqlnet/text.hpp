#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqlnet {

/// A token together with its [begin, end) byte range in the source text.
struct TokenPiece {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {

inline bool is_split_punctuation(char c) {
  switch (c) {
    case '.': case ',': case '?': case '!': case ';': case ':':
    case '\'': case '"': case '(': case ')': case '=':
      return true;
    default:
      return false;
  }
}

inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace detail

/// Rule-based tokenizer: lowercases, splits on whitespace and splits the
/// characters . , ? ! ; : ' " ( ) = into their own tokens. A '.' between two
/// digits stays inside the number ("2.5").
inline std::vector<TokenPiece> tokenize_with_offsets(std::string_view raw) {
  std::vector<TokenPiece> out;
  TokenPiece current;
  auto flush = [&](std::size_t at) {
    if (!current.text.empty()) {
      current.end = at;
      out.push_back(std::move(current));
    }
    current = TokenPiece{};
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (detail::is_space(c)) {
      flush(i);
      continue;
    }
    const bool decimal_point = c == '.' && i > 0 && i + 1 < raw.size() && detail::is_digit(raw[i - 1]) &&
                               detail::is_digit(raw[i + 1]);
    if (detail::is_split_punctuation(c) && !decimal_point) {
      flush(i);
      out.push_back(TokenPiece{std::string(1, c), i, i + 1});
      continue;
    }
    if (current.text.empty()) current.begin = i;
    current.text.push_back(detail::to_lower(c));
  }
  flush(raw.size());
  return out;
}

inline std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> out;
  for (auto& piece : tokenize_with_offsets(raw)) out.push_back(std::move(piece.text));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view separator,
                        std::size_t begin = 0, std::size_t end = std::string::npos) {
  std::string out;
  end = std::min(end, parts.size());
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.append(separator);
    out.append(parts[i]);
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = detail::to_lower(c);
  return out;
}

/// Lowercase, trim, collapse internal whitespace runs to one space, and strip
/// matching outer quote pairs. Quote stripping repeats until none remain, so
/// normalize_value(normalize_value(x)) == normalize_value(x).
inline std::string normalize_value(std::string_view value) {
  std::string s;
  bool pending_space = false;
  for (char c : value) {
    if (detail::is_space(c)) {
      pending_space = !s.empty();
      continue;
    }
    if (pending_space) s.push_back(' ');
    pending_space = false;
    s.push_back(detail::to_lower(c));
  }
  while (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
    const auto first = s.find_first_not_of(' ');
    if (first == std::string::npos) {
      s.clear();
      break;
    }
    s = s.substr(first, s.find_last_not_of(' ') - first + 1);
  }
  return s;
}

}  // namespace sqlnet
