#pragma once

// Matrix files, chosen by extension:
//   .csv  one matrix row per line, comma-separated decimal text
//   .gdm  "GDM1" | rows u64 LE | cols u64 LE | rows*cols f64 LE, row-major
// Label files hold one integer per line.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gdm/error.hpp"
#include "gdm/graph.hpp"
#include "gdm/linalg.hpp"

namespace gdm {

namespace io_detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path.string() + "'");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace io_detail

// Raw little-endian float64 payload, row-major, no header.
inline std::string encode_f64_row_major(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) io_detail::put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
  return out;
}

inline Matrix decode_f64_row_major(std::string_view bytes, Index rows, Index cols, std::size_t base_offset,
                                   const std::string& source) {
  const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
  require(bytes.size() == expected, ErrorKind::format,
          source + ": payload at byte offset " + std::to_string(base_offset) + " has " +
              std::to_string(bytes.size()) + " bytes, expected " + std::to_string(expected));
  Matrix m(rows, cols);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c, p += 8) m(r, c) = std::bit_cast<double>(io_detail::get_u64(p));
  return m;
}

inline constexpr std::string_view gdm_magic = "GDM1";
inline constexpr std::size_t gdm_header_bytes = 4 + 8 + 8;

inline std::string encode_gdm(const Matrix& m) {
  std::string out(gdm_magic);
  io_detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  io_detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out += encode_f64_row_major(m);
  return out;
}

inline Matrix decode_gdm(std::string_view bytes, const std::string& source = "<memory>") {
  require(bytes.size() >= 4, ErrorKind::format, source + ": truncated magic at byte offset 0");
  require(bytes.substr(0, 4) == gdm_magic, ErrorKind::format, source + ": bad magic at byte offset 0");
  require(bytes.size() >= gdm_header_bytes, ErrorKind::format,
          source + ": truncated header at byte offset " + std::to_string(bytes.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = io_detail::get_u64(p + 4);
  const std::uint64_t cols = io_detail::get_u64(p + 12);
  const std::size_t payload = bytes.size() - gdm_header_bytes;
  require(cols == 0 || rows <= payload / 8 / cols, ErrorKind::format,
          source + ": header at byte offset 4 declares " + std::to_string(rows) + "x" + std::to_string(cols) +
              " but only " + std::to_string(payload) + " payload bytes follow at byte offset " +
              std::to_string(gdm_header_bytes));
  return decode_f64_row_major(bytes.substr(gdm_header_bytes), static_cast<Index>(rows), static_cast<Index>(cols),
                              gdm_header_bytes, source);
}

inline std::string encode_csv(const Matrix& m) {
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      out += io_detail::format_double(m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

inline Matrix decode_csv(std::string_view text, const std::string& source = "<memory>") {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = io_detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    std::vector<double> row;
    if (!line.empty()) {
      while (true) {
        const auto comma = line.find(',');
        const std::string_view field = io_detail::trim(line.substr(0, comma));
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        require(!field.empty() && res.ec == std::errc{} && res.ptr == field.data() + field.size(), ErrorKind::format,
                source + ": line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
        row.push_back(v);
        if (comma == std::string_view::npos) break;
        line = line.substr(comma + 1);
      }
    }
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    require(static_cast<Index>(rows[i].size()) == c, ErrorKind::format,
            source + ": line " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) + " fields, expected " +
                std::to_string(c));
    for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".gdm") return decode_gdm(io_detail::read_file(path), path.string());
  if (ext == ".csv") return decode_csv(io_detail::read_file(path), path.string());
  throw Error(ErrorKind::format, "unknown matrix extension '" + ext + "' for " + path.string());
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  const std::string ext = path.extension().string();
  if (ext == ".gdm") return io_detail::write_file(path, encode_gdm(m));
  if (ext == ".csv") return io_detail::write_file(path, encode_csv(m));
  throw Error(ErrorKind::format, "unknown matrix extension '" + ext + "' for " + path.string());
}

inline LabelSequence read_labels(const std::filesystem::path& path) {
  const std::string text = io_detail::read_file(path);
  LabelSequence out;
  std::string_view rest = text;
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = io_detail::trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    require(res.ec == std::errc{} && res.ptr == line.data() + line.size(), ErrorKind::format,
            path.string() + ": line " + std::to_string(line_no) + ": bad label '" + std::string(line) + "'");
    out.push_back(v);
  }
  return out;
}

inline void write_labels(const std::filesystem::path& path, const LabelSequence& labels) {
  std::string out;
  for (const int l : labels) out += std::to_string(l) + "\n";
  io_detail::write_file(path, out);
}

inline CrossSubjectGraph read_graph(const std::filesystem::path& path, std::vector<Index> block_sizes) {
  return CrossSubjectGraph(read_matrix(path), std::move(block_sizes));
}

inline void write_graph(const std::filesystem::path& path, const CrossSubjectGraph& graph) {
  write_matrix(path, graph.weights());
}

}  // namespace gdm
