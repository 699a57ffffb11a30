// Copyright 2026 The Dialogkit Authors.
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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dialogkit {

/// Raised for malformed input files and records. Carries a short machine
/// readable code next to the human message.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace text {

// Record files are newline-delimited with tab-separated fields. Inside a
// field, backslash, tab, newline and carriage return are written as
// "\\", "\t", "\n" and "\r".
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

/// Splits a raw record line on tabs and unescapes every field.
std::vector<std::string> split_record(std::string_view line);
std::string join_record(const std::vector<std::string>& fields);

/// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string to_lower_ascii(std::string_view s);

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(char32_t cp);
/// Splits into one string per code point (each a valid UTF-8 sequence).
std::vector<std::string> utf8_chars(std::string_view s);

/// Letter test used by the alphabetic-fraction filter: ASCII letters, plus
/// non-ASCII code points outside the common punctuation, symbol and emoji
/// blocks.
bool is_alphabetic(char32_t cp);
bool is_space(char32_t cp);

/// Reads a whole file into lines (without terminators). Throws FormatError
/// with code "io" when the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace text
}  // namespace dialogkit
