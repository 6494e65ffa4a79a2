#include "htefs/matrix.hpp"

#include "htefs/error.hpp"

namespace htefs {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw Error(ErrorCode::LengthMismatch, "set_column: wrong length");
  for (std::size_t r = 0; r < rows_; ++r) data_[r * cols_ + c] = values[r];
}

Matrix Matrix::select_columns(std::span<const std::size_t> cols) const {
  Matrix out(rows_, cols.size());
  for (std::size_t c : cols)
    if (c >= cols_) throw Error(ErrorCode::DimensionMismatch, "select_columns: index out of range");
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* src = data_.data() + r * cols_;
    double* dst = out.data_.data() + r * cols.size();
    for (std::size_t k = 0; k < cols.size(); ++k) dst[k] = src[cols[k]];
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= rows_) throw Error(ErrorCode::DimensionMismatch, "select_rows: index out of range");
    std::copy_n(data_.data() + rows[k] * cols_, cols_, out.data_.data() + k * cols_);
  }
  return out;
}

Matrix Matrix::hconcat(const Matrix& other) const {
  if (other.rows_ != rows_) throw Error(ErrorCode::DimensionMismatch, "hconcat: row counts differ");
  Matrix out(rows_, cols_ + other.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto dst = out.row(r);
    std::copy(row(r).begin(), row(r).end(), dst.begin());
    std::copy(other.row(r).begin(), other.row(r).end(), dst.begin() + cols_);
  }
  return out;
}

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = values[rows[k]];
  return out;
}

}  // namespace htefs
