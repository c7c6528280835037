#pragma once

#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

namespace admp::cli {

inline std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  const int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string s(static_cast<std::size_t>(n), '\0');
  std::vsnprintf(s.data(), s.size() + 1, fmt, args);
  va_end(args);
  return s;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
      s += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return s;
  }

  // First column left-aligned, the rest right-aligned.
  std::string text() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], display_width(r[i]));
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string pad(width[i] - display_width(cells[i]), ' ');
        s += i == 0 ? cells[i] + pad : "  " + pad + cells[i];
      }
      s += '\n';
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    s += std::string(total - 2, '-') + '\n';
    for (const auto& r : rows) line(r);
    return s;
  }

private:
  static std::size_t display_width(const std::string& cell) {
    std::size_t n = 0;
    for (unsigned char c : cell) n += (c & 0xC0) != 0x80;  // count UTF-8 lead bytes
    return n;
  }
};

}  // namespace admp::cli
