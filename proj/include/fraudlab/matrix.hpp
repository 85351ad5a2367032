#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fraudlab {

// Dense row-major matrix of doubles with named columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> names);

  std::size_t rows() const noexcept { return cols() == 0 ? 0 : data_.size() / cols(); }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

  // Throws DataError when the width does not match.
  void append_row(std::span<const double> values);
  void reserve(std::size_t rows) { data_.reserve(rows * cols()); }

  FeatureMatrix select_columns(std::span<const std::size_t> columns) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  // Throws DataError naming the first non-finite cell.
  void require_finite() const;

  // Identifies the column layout; models refuse matrices with another hash.
  std::string manifest_hash() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> data_;
};

std::string manifest_hash(std::span<const std::string> names);

// Features plus labels (1 = positive, 0 = negative) and the row metadata the
// split needs. app_ids is empty for matrices read back from CSV.
struct LabeledMatrix {
  FeatureMatrix features;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint64_t> event_ids;
  std::vector<std::string> app_ids;

  std::size_t rows() const noexcept { return labels.size(); }
  LabeledMatrix select_rows(std::span<const std::size_t> rows) const;
  LabeledMatrix select_columns(std::span<const std::size_t> columns) const;
};

// "event_id,<feature names...>,label"
std::string write_matrix_csv(const LabeledMatrix& m);
LabeledMatrix parse_matrix_csv(std::string_view text);

}  // namespace fraudlab
