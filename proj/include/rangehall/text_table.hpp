#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace rangehall {

/// Fixed-width plain-text table. Cells are left aligned unless they parse
/// as numbers.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> headers) : headers_(std::move(headers)) {}

  TextTable& add(std::vector<std::string> row) {
    row.resize(headers_.size());
    rows_.push_back(std::move(row));
    return *this;
  }

  std::size_t size() const { return rows_.size(); }

  std::string render() const {
    std::vector<std::size_t> width(headers_.size());
    for (std::size_t c = 0; c < headers_.size(); ++c) {
      width[c] = display_width(headers_[c]);
      for (const auto& r : rows_) width[c] = std::max(width[c], display_width(r[c]));
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells, bool header) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::size_t pad = width[c] - display_width(cells[c]);
        const bool right = !header && numeric(cells[c]);
        if (c) out << "  ";
        if (right) out << std::string(pad, ' ') << cells[c];
        else out << cells[c] << (c + 1 < cells.size() ? std::string(pad, ' ') : "");
      }
      out << '\n';
    };
    line(headers_, true);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule, true);
    for (const auto& r : rows_) line(r, false);
    return out.str();
  }

 private:
  static std::size_t display_width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;  // count UTF-8 lead bytes
    return n;
  }

  static bool numeric(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0';
  }

  std::vector<std::string> headers_;
  std::vector<std::vector<std::string>> rows_;
};

/// Fixed-point formatting without locale surprises.
inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace rangehall
