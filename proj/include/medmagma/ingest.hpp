#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medmagma/denoise.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

// A loaded matrix (rows = cells, cols = genes) with identifiers, an optional
// categorical row label, and a provenance log of every preprocessing step.
struct Dataset {
  DataMatrix matrix;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::optional<std::vector<std::string>> row_labels;
  std::string source;
  std::vector<std::string> provenance;
};

struct DenseCsvOptions {
  char delimiter = ',';
  bool header_row = true;        // first row holds column names
  bool row_name_column = true;   // first column holds row names
  // header name of a categorical column to split off into row_labels
  std::optional<std::string> label_column;
};

Dataset load_dense(const std::string& path, const DenseCsvOptions& options = {});
void save_dense(const std::string& path, const Dataset& ds,
                const DenseCsvOptions& options = {});

// MatrixMarket "coordinate real general"; zeros implicit.
Dataset load_sparse_matrixmarket(const std::string& path);
void save_sparse_matrixmarket(const std::string& path, const Dataset& ds);

// Headerless numeric grid, the format used for matrices the CLI emits
// (factors, adjacency, latent/observed samples). Deterministic %.17g text.
Matrix load_matrix_csv(const std::string& path, char delimiter = ',');
void save_matrix_csv(const std::string& path, const Matrix& m,
                     char delimiter = ',');

// Keep the n columns of largest raw-value variance (population variance, no
// log transform); ties broken toward the lower column index. Pass-through
// when there are at most n columns.
Dataset select_variable_genes(const Dataset& ds, Index n = 2000);

// Sweep s = 1%..100% of rows in 1% steps, keeping columns with at least
// s * d_rows nonzeros, and choose the s whose surviving column count is
// closest to d_rows (ties toward smaller s).
Dataset squarify_by_sparsity(const Dataset& ds);

}  // namespace medmagma
