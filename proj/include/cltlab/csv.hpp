#pragma once
// Minimal CSV writer; floats at 17 significant digits.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace cltlab {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    write_cells(header);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }
  std::ofstream out_;
};

}  // namespace cltlab
