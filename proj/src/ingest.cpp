#include "medmagma/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "medmagma/errors.hpp"

namespace medmagma {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
      ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ": malformed numeric field '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_unique(const std::vector<std::string>& names,
                  const std::string& path, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      throw IoError(path + ": duplicate " + what + " '" + n + "'");
    }
  }
}

std::vector<std::string> default_names(const char* prefix, Index n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

Dataset subset_columns(const Dataset& ds, const std::vector<Index>& keep,
                       std::string log_line) {
  Matrix m(ds.matrix.d_rows(), static_cast<Index>(keep.size()));
  std::vector<std::string> names;
  names.reserve(keep.size());
  for (std::size_t t = 0; t < keep.size(); ++t) {
    m.col(static_cast<Index>(t)) = ds.matrix.entries().col(keep[t]);
    names.push_back(ds.col_names[keep[t]]);
  }
  Dataset out{DataMatrix(std::move(m)), ds.row_names, std::move(names),
              ds.row_labels, ds.source, ds.provenance};
  out.provenance.push_back(std::move(log_line));
  return out;
}

}  // namespace

Dataset load_dense(const std::string& path, const DenseCsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw IoError(path + ": empty file");

  std::size_t first_data = 0;
  std::vector<std::string> col_names;
  std::optional<std::size_t> label_idx;
  if (options.header_row) {
    auto header = split(lines[0], options.delimiter);
    if (options.row_name_column && !header.empty()) {
      header.erase(header.begin());
    }
    if (options.label_column) {
      auto it = std::find(header.begin(), header.end(), *options.label_column);
      if (it == header.end()) {
        throw IoError(path + ": label column '" + *options.label_column +
                      "' not found");
      }
      label_idx = static_cast<std::size_t>(it - header.begin());
      header.erase(it);
    }
    col_names = std::move(header);
    first_data = 1;
  } else if (options.label_column) {
    throw IoError(path + ": label column requires a header row");
  }

  std::vector<std::string> row_names;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
  for (std::size_t r = first_data; r < lines.size(); ++r) {
    auto fields = split(lines[r], options.delimiter);
    std::size_t at = 0;
    if (options.row_name_column) {
      if (fields.empty()) throw IoError(path + ": empty data row");
      row_names.push_back(fields[0]);
      at = 1;
    }
    std::vector<double> row;
    for (std::size_t c = at; c < fields.size(); ++c) {
      if (label_idx && (c - at) == *label_idx) {
        labels.push_back(fields[c]);
      } else {
        row.push_back(parse_double(fields[c], path));
      }
    }
    if (!values.empty() && row.size() != values.front().size()) {
      throw IoError(path + ": inconsistent row length at data row " +
                    std::to_string(r - first_data));
    }
    values.push_back(std::move(row));
  }
  if (values.empty() || values.front().empty()) {
    throw IoError(path + ": no numeric data");
  }
  const Index dr = static_cast<Index>(values.size());
  const Index dc = static_cast<Index>(values.front().size());
  if (options.header_row && static_cast<Index>(col_names.size()) != dc) {
    throw IoError(path + ": header names " + std::to_string(col_names.size()) +
                  " but data has " + std::to_string(dc) + " columns");
  }
  Matrix m(dr, dc);
  for (Index i = 0; i < dr; ++i)
    for (Index j = 0; j < dc; ++j) m(i, j) = values[i][j];

  Dataset ds{DataMatrix(std::move(m)),
             options.row_name_column ? std::move(row_names)
                                     : default_names("row", dr),
             options.header_row ? std::move(col_names)
                                : default_names("col", dc),
             std::nullopt,
             path,
             {}};
  if (label_idx) ds.row_labels = std::move(labels);
  check_unique(ds.row_names, path, "row name");
  check_unique(ds.col_names, path, "column name");
  ds.provenance.push_back("load_dense " + path);
  return ds;
}

void save_dense(const std::string& path, const Dataset& ds,
                const DenseCsvOptions& options) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const char d = options.delimiter;
  const Matrix& m = ds.matrix.entries();
  if (options.header_row) {
    if (options.row_name_column) out << "id" << d;
    if (options.label_column && ds.row_labels) out << *options.label_column << d;
    for (Index j = 0; j < m.cols(); ++j) {
      out << ds.col_names[j] << (j + 1 < m.cols() ? std::string(1, d) : "");
    }
    out << "\n";
  }
  for (Index i = 0; i < m.rows(); ++i) {
    if (options.row_name_column) out << ds.row_names[i] << d;
    if (options.label_column && ds.row_labels) out << (*ds.row_labels)[i] << d;
    for (Index j = 0; j < m.cols(); ++j) {
      out << format_double(m(i, j)) << (j + 1 < m.cols() ? std::string(1, d) : "");
    }
    out << "\n";
  }
}

Dataset load_sparse_matrixmarket(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  line = trimmed(line);
  std::stringstream banner(line);
  std::string tag, object, fmt, field, symmetry;
  banner >> tag >> object >> fmt >> field >> symmetry;
  if (tag != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate" ||
      (field != "real" && field != "integer") || symmetry != "general") {
    throw IoError(path + ": expected MatrixMarket 'coordinate real general'");
  }
  Index dr = 0, dc = 0;
  long long declared = -1;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (line.empty() || line[0] == '%') continue;
    std::stringstream size_line(line);
    if (!(size_line >> dr >> dc >> declared)) {
      throw IoError(path + ": malformed size line '" + line + "'");
    }
    break;
  }
  if (dr <= 0 || dc <= 0 || declared < 0) {
    throw IoError(path + ": invalid dimensions");
  }
  Matrix m = Matrix::Zero(dr, dc);
  long long seen = 0;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (line.empty() || line[0] == '%') continue;
    std::stringstream entry(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) {
      throw IoError(path + ": malformed entry '" + line + "'");
    }
    if (i < 1 || i > dr || j < 1 || j > dc) {
      throw IoError(path + ": entry index (" + std::to_string(i) + ", " +
                    std::to_string(j) + ") out of range");
    }
    m(i - 1, j - 1) = v;
    ++seen;
  }
  if (seen != declared) {
    throw IoError(path + ": header declares " + std::to_string(declared) +
                  " entries but file has " + std::to_string(seen));
  }
  Dataset ds{DataMatrix(std::move(m)), default_names("row", dr),
             default_names("col", dc), std::nullopt, path, {}};
  ds.provenance.push_back("load_sparse_matrixmarket " + path);
  return ds;
}

void save_sparse_matrixmarket(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const Matrix& m = ds.matrix.entries();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << " " << m.cols() << " " << ds.matrix.nnz_total() << "\n";
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) {
        out << (i + 1) << " " << (j + 1) << " " << format_double(m(i, j))
            << "\n";
      }
    }
  }
}

Matrix load_matrix_csv(const std::string& path, char delimiter) {
  DenseCsvOptions opt;
  opt.delimiter = delimiter;
  opt.header_row = false;
  opt.row_name_column = false;
  return load_dense(path, opt).matrix.entries();
}

void save_matrix_csv(const std::string& path, const Matrix& m, char delimiter) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      out << format_double(m(i, j))
          << (j + 1 < m.cols() ? std::string(1, delimiter) : "");
    }
    out << "\n";
  }
}

Dataset select_variable_genes(const Dataset& ds, Index n) {
  if (ds.matrix.d_cols() <= n) {
    Dataset out = ds;
    out.provenance.push_back("select_variable_genes: pass-through (" +
                             std::to_string(ds.matrix.d_cols()) + " <= " +
                             std::to_string(n) + ")");
    return out;
  }
  const Matrix& m = ds.matrix.entries();
  Vector mean = m.colwise().mean();
  Vector variance(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    variance(j) = (m.col(j).array() - mean(j)).square().mean();
  }
  std::vector<Index> order(m.cols());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return variance(a) > variance(b);
  });
  std::vector<Index> keep(order.begin(), order.begin() + n);
  std::sort(keep.begin(), keep.end());  // preserve original column order
  return subset_columns(ds, keep,
                        "select_variable_genes: kept " + std::to_string(n) +
                            " of " + std::to_string(m.cols()));
}

Dataset squarify_by_sparsity(const Dataset& ds) {
  const Index dr = ds.matrix.d_rows();
  const auto& nnz = ds.matrix.nnz_col();
  int best_s = -1;
  Index best_kept = -1;
  for (int s = 1; s <= 100; ++s) {
    const double threshold = s / 100.0 * static_cast<double>(dr);
    Index kept = 0;
    for (Index c : nnz) {
      if (static_cast<double>(c) >= threshold) ++kept;
    }
    if (kept == 0) continue;
    if (best_s < 0 ||
        std::abs(dr - kept) < std::abs(dr - best_kept)) {
      best_s = s;
      best_kept = kept;
    }
  }
  if (best_s < 0) {
    throw PreprocessingError(
        "squarify_by_sparsity: every sparsity threshold removes all columns");
  }
  const double threshold = best_s / 100.0 * static_cast<double>(dr);
  std::vector<Index> keep;
  for (Index j = 0; j < ds.matrix.d_cols(); ++j) {
    if (static_cast<double>(nnz[j]) >= threshold) keep.push_back(j);
  }
  return subset_columns(ds, keep,
                        "squarify_by_sparsity: s=" + std::to_string(best_s) +
                            "% kept " + std::to_string(keep.size()) +
                            " columns");
}

}  // namespace medmagma
