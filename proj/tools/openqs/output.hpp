#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <openqs/linalg.hpp>
#include <openqs/serialize.hpp>

namespace openqs::cli {

// stdout unless a path is given
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ValidationError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
    for (size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  void row(const std::vector<double>& r) {
    for (size_t i = 0; i < r.size(); ++i) os_ << (i ? "," : "") << num(r[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

// "re_X_ij", "im_X_ij" column names for a d x d matrix, row-major
inline std::vector<std::string> matrix_columns(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      out.push_back("re_" + name + "_" + std::to_string(i) + std::to_string(j));
      out.push_back("im_" + name + "_" + std::to_string(i) + std::to_string(j));
    }
  return out;
}

inline void append_matrix(std::vector<double>& row, const Mat& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      row.push_back(a(i, j).real());
      row.push_back(a(i, j).imag());
    }
}

inline void write_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

inline json cplx_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

}  // namespace openqs::cli
