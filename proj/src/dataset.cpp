#include "pwsml/dataset.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"
#include "pwsml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace pwsml {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels disagree");
  }
  if (!column_names.empty() && column_names.size() != cols()) {
    throw Error(ErrorCode::ShapeMismatch, "column names do not match the feature width");
  }
  if (!label_names.empty()) {
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= label_names.size()) {
        throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " outside label_names");
      }
    }
  }
  if (!features.allFinite()) throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite features");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  out.column_names = column_names;
  out.label_names = label_names;
  out.provenance = provenance;
  return out;
}

SplitDataset split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = ds.rows();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "TooFewRows: need at least two rows to split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng = stream(seed, 0, 0x5B117);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  SplitDataset out;
  out.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  out.train = ds.subset(out.train_rows);
  out.test = ds.subset(out.test_rows);
  out.test_fraction = test_fraction;
  out.seed = seed;
  return out;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  ds.validate();
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    out << (ds.column_names.empty() ? "f" + std::to_string(c) : ds.column_names[c]) << ',';
  }
  out << "label\n";
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      out << format_g17(ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) << ',';
    }
    out << ds.labels[r] << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  write_csv(ds, out);
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (trim(header.back()) != "label") throw ParseError(1, "last header column must be 'label'");

  Dataset ds;
  for (std::size_t c = 0; c + 1 < header.size(); ++c) ds.column_names.emplace_back(trim(header[c]));
  const std::size_t n_cols = ds.column_names.size();

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != n_cols + 1) {
      throw ParseError(line_no, "expected " + std::to_string(n_cols + 1) + " cells, found " +
                                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw ParseError(line_no, "non-numeric value '" + std::string(cells[c]) + "' in column " +
                                      std::to_string(c + 1));
      }
      values.push_back(v);
    }
    long long label = 0;
    if (!parse_int(cells[n_cols], label)) {
      throw ParseError(line_no, "label '" + std::string(cells[n_cols]) + "' is not an integer");
    }
    ds.labels.push_back(static_cast<int>(label));
  }
  ds.features = Eigen::Map<FeatureMatrix>(values.data(), static_cast<Eigen::Index>(ds.labels.size()),
                                          static_cast<Eigen::Index>(n_cols));
  return ds;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_csv(in);
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  Standardizer s;
  const Eigen::Index cols = x.cols();
  s.mean = Eigen::VectorXd::Zero(cols);
  s.scale = Eigen::VectorXd::Ones(cols);
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mean = sum / n;
    double sq = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) sq += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(sq / n);
    s.mean[c] = mean;
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  if (empty()) return x;
  if (x.cols() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "standardizer width does not match input");
  FeatureMatrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

std::vector<int> distinct_labels(const std::vector<int>& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

}  // namespace pwsml
