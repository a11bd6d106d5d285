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

#include "lpr/charset.hpp"

#include <algorithm>

#include "lpr/error.hpp"

namespace lpr {

std::u32string utf8_to_u32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead >> 5) == 0x6) {
      len = 2;
      cp = lead & 0x1f;
    } else if ((lead >> 4) == 0xe) {
      len = 3;
      cp = lead & 0x0f;
    } else if ((lead >> 3) == 0x1e) {
      len = 4;
      cp = lead & 0x07;
    } else {
      throw ParameterError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw ParameterError("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont >> 6) != 0x2) {
        throw ParameterError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      }
      cp = (cp << 6) | (cont & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string u32_to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

CharSet CharSet::from_utf8(std::string_view alphabet) {
  CharSet cs;
  cs.chars_ = utf8_to_u32(alphabet);
  if (cs.chars_.empty()) throw ParameterError("character set is empty");
  std::u32string sorted = cs.chars_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParameterError("character set contains duplicates");
  }
  return cs;
}

CharSet CharSet::latin_default() {
  return from_utf8("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ");
}

std::optional<int> CharSet::index_of(char32_t ch) const {
  const auto pos = chars_.find(ch);
  if (pos == std::u32string::npos) return std::nullopt;
  return static_cast<int>(pos);
}

char32_t CharSet::at(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= chars_.size()) {
    throw ParameterError("class index " + std::to_string(index) + " is not a character");
  }
  return chars_[static_cast<std::size_t>(index)];
}

std::vector<int> CharSet::encode(std::string_view utf8) const {
  std::vector<int> out;
  for (char32_t ch : utf8_to_u32(utf8)) {
    const auto idx = index_of(ch);
    if (!idx) {
      throw ParameterError("character '" + u32_to_utf8(std::u32string(1, ch)) +
                           "' is outside the character set");
    }
    out.push_back(*idx);
  }
  return out;
}

std::string CharSet::decode(std::span<const int> indices) const {
  std::u32string out;
  for (int i : indices) out.push_back(at(i));
  return u32_to_utf8(out);
}

}  // namespace lpr
