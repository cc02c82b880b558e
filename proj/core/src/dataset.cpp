#include "uxai/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "uxai/rng.hpp"

namespace uxai {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    // trim surrounding spaces
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? "" : f.substr(b, e - b + 1);
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

// Resolves a column reference (header name, or zero-based index as digits)
// against a header. Returns npos when nothing matches and required is false.
std::size_t resolve_column(const std::vector<std::string>& header,
                           const std::string& ref, bool required,
                           const std::filesystem::path& path) {
  auto it = std::find(header.begin(), header.end(), ref);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  if (!ref.empty() &&
      std::all_of(ref.begin(), ref.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    std::size_t idx = std::stoul(ref);
    if (idx < header.size()) return idx;
    if (required) {
      throw DataError(path.string() + ": label column index " + ref +
                      " out of range (file has " +
                      std::to_string(header.size()) + " columns)");
    }
  }
  if (required) {
    throw DataError(path.string() + ": no column named '" + ref + "'");
  }
  return std::string::npos;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // Drop trailing blank lines; blank lines elsewhere are malformed rows and
  // will be reported as such.
  while (!lines.empty() && split_line(lines.back()) == std::vector<std::string>{""}) {
    lines.pop_back();
  }
  if (lines.empty()) throw DataError(path.string() + " is empty");
  return lines;
}

}  // namespace

Dataset Dataset::take(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.features = Matrix(rows.size(), num_features());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

void Dataset::validate() const {
  if (labels.size() != features.rows()) {
    throw DataError("dataset: label count does not match row count");
  }
  if (feature_names.size() != features.cols()) {
    throw DataError("dataset: feature name count does not match column count");
  }
  if (class_names.empty()) throw DataError("dataset: no classes");
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      if (!std::isfinite(features(r, c))) {
        throw DataError("dataset: non-finite value at row " +
                        std::to_string(r) + ", column " + feature_names[c]);
      }
    }
    if (labels[r] < 0 ||
        labels[r] >= static_cast<int>(class_names.size())) {
      throw DataError("dataset: label out of range at row " +
                      std::to_string(r));
    }
  }
}

Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column) {
  auto lines = read_lines(path);
  auto header = split_line(lines[0]);
  std::size_t label_idx = resolve_column(header, label_column, true, path);

  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) d.feature_names.push_back(header[c]);
  }
  d.features = Matrix(0, 0);
  std::map<std::string, int> class_ids;

  std::vector<double> row(header.size() - 1);
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    auto fields = split_line(lines[ln]);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + " line " + std::to_string(ln + 1) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::size_t j = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) continue;
      double v;
      if (!parse_double(fields[c], v) || !std::isfinite(v)) {
        throw DataError(path.string() + " line " + std::to_string(ln + 1) +
                        ", column '" + header[c] + "': not a finite number ('" +
                        fields[c] + "')");
      }
      row[j++] = v;
    }
    auto [it, inserted] = class_ids.try_emplace(
        fields[label_idx], static_cast<int>(d.class_names.size()));
    if (inserted) d.class_names.push_back(fields[label_idx]);
    d.labels.push_back(it->second);
    d.features.push_row(row);
  }

  if (d.size() == 0) throw DataError(path.string() + ": no data rows");
  if (d.num_classes() < 2) {
    throw DataError(path.string() + ": needs at least two classes, found " +
                    std::to_string(d.num_classes()));
  }
  return d;
}

Matrix load_feature_csv(const std::filesystem::path& path,
                        const std::string& drop_column) {
  auto lines = read_lines(path);
  auto header = split_line(lines[0]);
  std::size_t drop_idx =
      drop_column.empty()
          ? std::string::npos
          : resolve_column(header, drop_column, false, path);

  Matrix m;
  std::vector<double> row;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    auto fields = split_line(lines[ln]);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + " line " + std::to_string(ln + 1) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    row.clear();
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == drop_idx) continue;
      double v;
      if (!parse_double(fields[c], v) || !std::isfinite(v)) {
        throw DataError(path.string() + " line " + std::to_string(ln + 1) +
                        ", column '" + header[c] + "': not a finite number ('" +
                        fields[c] + "')");
      }
      row.push_back(v);
    }
    m.push_row(row);
  }
  if (m.rows() == 0) throw DataError(path.string() + ": no data rows");
  return m;
}

NormParams fit_minmax(const Dataset& train) {
  if (train.size() == 0) throw DataError("fit_minmax: empty dataset");
  NormParams p;
  std::size_t q = train.num_features();
  p.min.assign(q, 0.0);
  p.max.assign(q, 0.0);
  for (std::size_t c = 0; c < q; ++c) {
    double lo = train.features(0, c), hi = lo;
    for (std::size_t r = 1; r < train.size(); ++r) {
      lo = std::min(lo, train.features(r, c));
      hi = std::max(hi, train.features(r, c));
    }
    p.min[c] = lo;
    p.max[c] = hi;
  }
  return p;
}

std::vector<double> apply_minmax(const NormParams& p,
                                 std::span<const double> x) {
  if (x.size() != p.size()) {
    throw DataError("apply_minmax: dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    double range = p.max[c] - p.min[c];
    out[c] = range == 0.0 ? 0.5 : (x[c] - p.min[c]) / range;
  }
  return out;
}

Dataset apply_minmax(const NormParams& p, const Dataset& d) {
  Dataset out = d;
  for (std::size_t r = 0; r < d.size(); ++r) {
    auto scaled = apply_minmax(p, d.features.row(r));
    std::copy(scaled.begin(), scaled.end(), out.features.row(r).begin());
  }
  return out;
}

std::vector<double> invert_minmax(const NormParams& p,
                                  std::span<const double> x) {
  if (x.size() != p.size()) {
    throw DataError("invert_minmax: dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    double range = p.max[c] - p.min[c];
    // A constant column always maps back to its single observed value.
    out[c] = range == 0.0 ? p.min[c] : p.min[c] + x[c] * range;
  }
  return out;
}

namespace {

std::size_t clamped_train_count(double fraction, std::size_t total) {
  auto n = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(fraction * static_cast<double>(total))));
  return std::min(n, total - 1);
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<int>& labels, const SplitSpec& spec) {
  if (labels.size() < 2) {
    throw DataError("train_test_split: need at least two rows");
  }
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw DataError("train_test_split: train_fraction must be in (0, 1)");
  }
  Rng rng(spec.seed);
  std::vector<std::size_t> train, test;

  if (!spec.stratified) {
    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t n_train = clamped_train_count(spec.train_fraction, order.size());
    train.assign(order.begin(), order.begin() + n_train);
    test.assign(order.begin() + n_train, order.end());
  } else {
    int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == c) members.push_back(i);
      }
      if (members.empty()) continue;
      if (members.size() < 2) {
        throw DataError(
            "train_test_split: class " + std::to_string(c) +
            " has a single row; stratified split cannot cover both sides");
      }
      rng.shuffle(members);
      std::size_t n_train =
          clamped_train_count(spec.train_fraction, members.size());
      train.insert(train.end(), members.begin(), members.begin() + n_train);
      test.insert(test.end(), members.begin() + n_train, members.end());
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d,
                                             const SplitSpec& spec) {
  auto [train_idx, test_idx] = split_indices(d.labels, spec);
  return {d.take(train_idx), d.take(test_idx)};
}

Dataset make_toy_moons(std::size_t n_per_class, double noise,
                       std::uint64_t seed) {
  if (n_per_class == 0) {
    throw std::invalid_argument("make_toy_moons: n_per_class must be positive");
  }
  Rng rng(seed);
  Dataset d;
  d.feature_names = {"x", "y"};
  d.class_names = {"upper", "lower"};
  d.features = Matrix(2 * n_per_class, 2);

  auto arc_t = [n_per_class](std::size_t i) {
    if (n_per_class == 1) return 0.0;
    return std::numbers::pi * static_cast<double>(i) /
           static_cast<double>(n_per_class - 1);
  };
  for (std::size_t i = 0; i < n_per_class; ++i) {
    double t = arc_t(i);
    d.features(i, 0) = std::cos(t) + noise * rng.normal();
    d.features(i, 1) = std::sin(t) + noise * rng.normal();
  }
  for (std::size_t i = 0; i < n_per_class; ++i) {
    double t = arc_t(i);
    std::size_t r = n_per_class + i;
    d.features(r, 0) = 1.0 - std::cos(t) + noise * rng.normal();
    d.features(r, 1) = 0.5 - std::sin(t) + noise * rng.normal();
  }
  d.labels.assign(n_per_class, 0);
  d.labels.insert(d.labels.end(), n_per_class, 1);
  return d;
}

}  // namespace uxai
