// Copyright 2026 The lprbench Authors.
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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lpr {

std::u32string utf8_to_u32(std::string_view text);
std::string u32_to_utf8(std::u32string_view text);

/// Ordered recognition alphabet. Class indices 0..size()-1 map to the
/// characters in order; the CTC blank takes the last index, size().
class CharSet {
 public:
  // Rejects empty and duplicate-containing alphabets.
  static CharSet from_utf8(std::string_view alphabet);
  // Digits followed by upper-case Latin letters.
  static CharSet latin_default();

  std::size_t size() const { return chars_.size(); }
  std::size_t classes() const { return chars_.size() + 1; }
  int blank() const { return static_cast<int>(chars_.size()); }

  std::optional<int> index_of(char32_t ch) const;
  bool contains(char32_t ch) const { return index_of(ch).has_value(); }
  char32_t at(int index) const;

  // Throws ParameterError naming the first character outside the alphabet.
  std::vector<int> encode(std::string_view utf8) const;
  std::string decode(std::span<const int> indices) const;

  std::string str() const { return u32_to_utf8(chars_); }
  const std::u32string& chars() const { return chars_; }

  friend bool operator==(const CharSet&, const CharSet&) = default;

 private:
  std::u32string chars_;
};

}  // namespace lpr
