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

#include "lpr/pareto.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lpr/charset.hpp"

namespace lpr {

CharErrorTally tally_same_length_errors(const std::vector<PredictionRecord>& records) {
  CharErrorTally tally;
  for (const PredictionRecord& r : records) {
    if (classify_prediction(r) != Outcome::tn2) continue;
    const std::u32string t = utf8_to_u32(r.ground_truth), p = utf8_to_u32(r.predicted);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == p[i]) continue;
      ++tally.fp_counts[p[i]];
      ++tally.fn_counts[t[i]];
    }
  }
  return tally;
}

ParetoTable build_pareto(const std::map<char32_t, std::size_t>& counts) {
  std::vector<std::pair<char32_t, std::size_t>> items;
  std::size_t total = 0;
  for (const auto& [ch, n] : counts) {
    if (n == 0) continue;
    items.emplace_back(ch, n);
    total += n;
  }
  if (total == 0) throw EmptyAnalysisError("no character errors to analyse");
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  ParetoTable table;
  std::size_t prefix = 0;
  const auto denom = static_cast<double>(total);
  for (const auto& [ch, n] : items) {
    prefix += n;
    table.rows.push_back({ch, n, 100.0 * static_cast<double>(n) / denom, 100.0 * static_cast<double>(prefix) / denom});
  }
  return table;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string pareto_csv(const ParetoTable& table) {
  std::string out = "character,count,percent,cumulative_percent\n";
  for (const ParetoRow& r : table.rows) {
    out += u32_to_utf8(std::u32string(1, r.character)) + "," + std::to_string(r.count) + "," + fmt17(r.percent) +
           "," + fmt17(r.cumulative_percent) + "\n";
  }
  return out;
}

ParetoTable parse_pareto_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "character,count,percent,cumulative_percent") {
    throw IoError("pareto CSV lacks the expected header");
  }
  ParetoTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // Split from the right so that ',' itself may appear as a character.
    const std::size_t c3 = line.rfind(',');
    const std::size_t c2 = c3 == std::string::npos || c3 == 0 ? std::string::npos : line.rfind(',', c3 - 1);
    const std::size_t c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) throw IoError("malformed pareto CSV row: " + line);
    const std::u32string ch = utf8_to_u32(line.substr(0, c1));
    if (ch.size() != 1) throw IoError("pareto CSV row must name one character: " + line);
    try {
      table.rows.push_back({ch[0], std::stoull(line.substr(c1 + 1, c2 - c1 - 1)),
                            std::stod(line.substr(c2 + 1, c3 - c2 - 1)), std::stod(line.substr(c3 + 1))});
    } catch (const std::logic_error&) {
      throw IoError("malformed pareto CSV row: " + line);
    }
  }
  return table;
}

ParetoTable read_pareto_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_pareto_csv(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::string pareto_svg(const ParetoTable& table, const std::string& title) {
  if (table.rows.empty()) throw EmptyAnalysisError("cannot chart an empty pareto table");
  constexpr double kW = 720, kH = 420, kLeft = 60, kRight = 60, kTop = 50, kBottom = 50;
  const double plot_w = kW - kLeft - kRight, plot_h = kH - kTop - kBottom;
  const double base = kTop + plot_h;
  const double max_count = static_cast<double>(table.rows.front().count);
  const double slot = plot_w / static_cast<double>(table.rows.size());

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
      << "<style>.bar{fill:#4472c4}.cumulative{fill:none;stroke:#c0504d;stroke-width:2}"
         "text{font-family:sans-serif;font-size:12px}</style>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"25\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n"
      << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << base
      << "\" stroke=\"black\"/>\n"
      << "<line class=\"axis\" x1=\"" << kLeft + plot_w << "\" y1=\"" << kTop << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << base << "\" stroke=\"black\"/>\n"
      << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << base << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << base << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = base - plot_h * k / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
        << num(max_count * k / 4.0) << "</text>\n"
        << "<text x=\"" << kLeft + plot_w + 6 << "\" y=\"" << num(y + 4) << "\">" << 25 * k << "%</text>\n";
  }
  std::string points;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const ParetoRow& r = table.rows[i];
    const double h = plot_h * static_cast<double>(r.count) / max_count;
    const double x = kLeft + slot * static_cast<double>(i);
    svg << "<rect class=\"bar\" x=\"" << num(x + slot * 0.1) << "\" y=\"" << num(base - h) << "\" width=\""
        << num(slot * 0.8) << "\" height=\"" << num(h) << "\"/>\n"
        << "<text x=\"" << num(x + slot / 2) << "\" y=\"" << base + 16 << "\" text-anchor=\"middle\">"
        << xml_escape(u32_to_utf8(std::u32string(1, r.character))) << "</text>\n";
    if (!points.empty()) points += ' ';
    points += num(x + slot / 2) + "," + num(base - plot_h * r.cumulative_percent / 100.0);
  }
  svg << "<polyline class=\"cumulative\" points=\"" << points << "\"/>\n</svg>\n";
  return svg.str();
}

void emit_pareto_chart(const ParetoTable& table, const std::string& title, const std::string& path) {
  const std::string svg = pareto_svg(table, title);
  std::filesystem::path csv_path(path);
  csv_path.replace_extension(".csv");
  for (const auto& [p, body] : {std::pair{std::filesystem::path(path), svg}, std::pair{csv_path, pareto_csv(table)}}) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << body;
    if (!out) throw IoError("failed writing " + p.string());
  }
}

}  // namespace lpr
