// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lrvae/errors.hpp"

namespace lrvae::io {

std::string fmt_double(double v);  // "%.12g"

// Comma-separated, '.' decimal, LF line endings. Leading comment lines are
// prefixed with "# " (run config provenance goes there).
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& comments,
              const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    void flush() { out_.flush(); }

  private:
    std::ofstream out_;
    std::size_t width_;
};

// Binary 8-bit PGM (P5), maxval 255; comments become "# " header lines.
void write_pgm(const std::string& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels,
               const std::vector<std::string>& comments = {});

std::string read_file(const std::string& path);

}  // namespace lrvae::io
