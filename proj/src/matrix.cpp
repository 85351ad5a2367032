#include "fraudlab/matrix.hpp"

#include <cmath>

#include "fraudlab/config.hpp"
#include "fraudlab/csv.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names) : names_(std::move(names)) {}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (values.size() != cols()) {
    throw DataError("row has " + std::to_string(values.size()) + " values, matrix has " +
                    std::to_string(cols()) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  for (auto c : columns) {
    if (c >= cols()) throw DataError("column index out of range");
    names.push_back(names_[c]);
  }
  FeatureMatrix out(std::move(names));
  out.data_.reserve(rows() * columns.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto c : columns) out.data_.push_back(at(r, c));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows_) const {
  FeatureMatrix out(names_);
  out.data_.reserve(rows_.size() * cols());
  for (auto r : rows_) {
    const auto src = row(r);
    out.data_.insert(out.data_.end(), src.begin(), src.end());
  }
  return out;
}

void FeatureMatrix::require_finite() const {
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) {
      if (!std::isfinite(at(r, c))) {
        throw DataError("non-finite value in column '" + names_[c] + "' at row " + std::to_string(r));
      }
    }
  }
}

std::string FeatureMatrix::manifest_hash() const { return fraudlab::manifest_hash(names_); }

std::string manifest_hash(std::span<const std::string> names) {
  std::uint64_t h = fnv1a64("fraudlab-features");
  for (const auto& n : names) {
    h = fnv1a64(n, h);
    h = fnv1a64(",", h);
  }
  return hex16(h);
}

LabeledMatrix LabeledMatrix::select_rows(std::span<const std::size_t> rows_) const {
  LabeledMatrix out;
  out.features = features.select_rows(rows_);
  for (auto r : rows_) {
    out.labels.push_back(labels[r]);
    if (!event_ids.empty()) out.event_ids.push_back(event_ids[r]);
    if (!app_ids.empty()) out.app_ids.push_back(app_ids[r]);
  }
  return out;
}

LabeledMatrix LabeledMatrix::select_columns(std::span<const std::size_t> columns) const {
  LabeledMatrix out = *this;
  out.features = features.select_columns(columns);
  return out;
}

std::string write_matrix_csv(const LabeledMatrix& m) {
  std::string out = "event_id";
  for (const auto& n : m.features.names()) out.append(",").append(n);
  out.append(",label\n");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out.append(std::to_string(m.event_ids.empty() ? r : m.event_ids[r]));
    for (double v : m.features.row(r)) {
      out.push_back(',');
      csv::append_double(out, v);
    }
    out.push_back(',');
    out.push_back(m.labels[r] ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

LabeledMatrix parse_matrix_csv(std::string_view text) {
  csv::LineReader reader(text);
  std::string_view line;
  if (!reader.next(line)) throw ParseError(1, "header", "empty matrix file");
  const auto header = csv::split(line);
  if (header.size() < 3 || header.front() != "event_id" || header.back() != "label") {
    throw ParseError(1, "header", "expected 'event_id,<features>,label'");
  }
  std::vector<std::string> names(header.begin() + 1, header.end() - 1);
  LabeledMatrix m;
  m.features = FeatureMatrix(names);
  std::vector<double> row(names.size());
  while (reader.next(line)) {
    const std::size_t n = reader.line_number();
    const auto f = csv::split(line);
    if (f.size() != header.size()) throw ParseError(n, "row", "expected " + std::to_string(header.size()) + " fields");
    m.event_ids.push_back(csv::parse_int<std::uint64_t>(f.front(), n, "event_id"));
    for (std::size_t c = 0; c < names.size(); ++c) row[c] = csv::parse_double(f[c + 1], n, names[c]);
    m.features.append_row(row);
    if (f.back() == "1") {
      m.labels.push_back(1);
    } else if (f.back() == "0") {
      m.labels.push_back(0);
    } else {
      throw ParseError(n, "label", "expected 0 or 1");
    }
  }
  return m;
}

}  // namespace fraudlab
