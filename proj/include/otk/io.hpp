#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "otk/errors.hpp"
#include "otk/model.hpp"

namespace otk {

// Shortest decimal form that parses back to the same double, so text
// round-trips are exact (well beyond the 17-significant-digit contract).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw input_error("could not parse number '" + tok + "'");
  if (!std::isfinite(v))
    throw input_error("non-finite value '" + tok + "' rejected");
  return v;
}

inline long long parse_count(std::istream& in, const char* what) {
  long long v;
  if (!(in >> v) || v < 0)
    throw input_error(std::string("expected nonnegative ") + what +
                      " in header");
  return v;
}

// Text format: header "m n", then m rows of n whitespace-separated decimals.
inline void write_matrix(std::ostream& out, const Matrix& A) {
  out << A.rows() << ' ' << A.cols() << '\n';
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(A(i, j));
    }
    out << '\n';
  }
}

inline Matrix read_matrix(std::istream& in) {
  long long m = parse_count(in, "row count");
  long long n = parse_count(in, "column count");
  Matrix A(m, n);
  std::string tok;
  for (long long i = 0; i < m; ++i)
    for (long long j = 0; j < n; ++j) {
      if (!(in >> tok)) throw input_error("matrix data ended early");
      A(i, j) = parse_double(tok);
    }
  return A;
}

// Vectors: header "n", then n decimals.
inline void write_vector(std::ostream& out, const Vector& v) {
  out << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

inline Vector read_vector(std::istream& in) {
  long long n = parse_count(in, "length");
  Vector v(n);
  std::string tok;
  for (long long i = 0; i < n; ++i) {
    if (!(in >> tok)) throw input_error("vector data ended early");
    v[i] = parse_double(tok);
  }
  return v;
}

inline void write_matrix_file(const std::string& path, const Matrix& A) {
  std::ofstream f(path);
  if (!f) throw input_error("cannot open '" + path + "' for writing");
  write_matrix(f, A);
}

inline Matrix read_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot open '" + path + "'");
  return read_matrix(f);
}

inline void write_vector_file(const std::string& path, const Vector& v) {
  std::ofstream f(path);
  if (!f) throw input_error("cannot open '" + path + "' for writing");
  write_vector(f, v);
}

inline Vector read_vector_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot open '" + path + "'");
  return read_vector(f);
}

// RFC 4180 field quoting; our fields are plain tokens but the writer stays
// general. Records end with CRLF.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) row += ',';
    row += csv_field(fields[i]);
  }
  row += "\r\n";
  return row;
}

}  // namespace otk
