#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slfr/types.hpp"

namespace slfr {

using json = nlohmann::json;

inline std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_long(const std::string& s, long long& out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

// Round-trippable double formatting for CSV output.
inline std::string format_double(double x) {
  std::ostringstream ss;
  ss.precision(17);
  ss << x;
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path.string());
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  return json::parse(read_text_file(path));
}

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string config_digest(const json& config) {
  return fnv1a_hex(config.dump());
}

// Flat [rows*cols] row-major <-> json array helpers for checkpoints.
inline json matrix_to_json(const Matrixd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

inline Matrixd matrix_from_json(const json& a, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(a.size()) != rows * cols)
    throw InputError("matrix payload size mismatch: expected " +
                     std::to_string(rows * cols) + " values, got " +
                     std::to_string(a.size()));
  Matrixd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[k++].get<double>();
  return m;
}

inline json vector_to_json(const Vectord& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vectord vector_from_json(const json& a, Eigen::Index size) {
  if (static_cast<Eigen::Index>(a.size()) != size)
    throw InputError("vector payload size mismatch");
  Vectord v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = a[i].get<double>();
  return v;
}

}  // namespace slfr
