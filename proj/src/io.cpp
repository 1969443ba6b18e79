// SPDX-License-Identifier: Apache-2.0
#include "lrvae/io.hpp"

#include <cstdio>
#include <sstream>

namespace lrvae::io {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()) {
    if (!out_) throw IoError("cannot write " + path);
    for (const auto& c : comments) out_ << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw ContractError("CsvWriter: row width " + std::to_string(cells.size()) +
                            " != header width " + std::to_string(width_));
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    if (!out_) throw IoError("CsvWriter: write failed");
}

void write_pgm(const std::string& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels,
               const std::vector<std::string>& comments) {
    if (pixels.size() != width * height)
        throw ContractError("write_pgm: pixel count != width*height");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n";
    for (const auto& c : comments) out << "# " << c << "\n";
    out << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write_pgm: write failed");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace lrvae::io
