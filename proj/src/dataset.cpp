#include "hdk/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view tok, int line_no, int col) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw DataError("line " + std::to_string(line_no) + ", field " +
                    std::to_string(col + 1) + ": cannot parse '" +
                    std::string(tok) + "' as a number");
  return v;
}

long long parse_label(std::string_view tok, int line_no) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw DataError("line " + std::to_string(line_no) + ": label '" +
                    std::string(tok) + "' is not an integer");
  return v;
}

// Canonicalizes raw labels to 1..N_c (ascending original order).
void canonicalize(const std::vector<long long>& raw, Dataset& ds) {
  std::vector<long long> distinct(raw);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<long long, int> to_canonical;
  for (size_t i = 0; i < distinct.size(); ++i)
    to_canonical[distinct[i]] = static_cast<int>(i) + 1;
  ds.original_labels = distinct;
  ds.labels.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) ds.labels[i] = to_canonical[raw[i]];
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

void format_full(char* buf, size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(class_count(), 0);
  for (int l : labels) counts[l - 1]++;
  return counts;
}

std::vector<int> Dataset::class_indices(int class_id) const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (labels[i] == class_id) idx.push_back(i);
  return idx;
}

Eigen::MatrixXd Dataset::class_rows(int class_id) const {
  auto idx = class_indices(class_id);
  Eigen::MatrixXd out(idx.size(), d());
  for (size_t r = 0; r < idx.size(); ++r) out.row(r) = features.row(idx[r]);
  return out;
}

Dataset load_dense_csv(const std::string& path, int label_column,
                       bool skip_header) {
  auto lines = read_nonempty_lines(path);
  if (lines.empty()) throw DataError("'" + path + "' is empty");

  std::vector<std::string> header_names;
  size_t first = 0;
  if (skip_header) {
    if (lines.size() < 2) throw DataError("'" + path + "' has no data rows");
    std::stringstream hs(lines[0]);
    std::string tok;
    while (std::getline(hs, tok, ',')) header_names.emplace_back(trim(tok));
    first = 1;
  }

  // Field count fixed by the first data row.
  auto split_fields = [](const std::string& line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    std::string_view sv(line);
    while (true) {
      size_t comma = sv.find(',', start);
      if (comma == std::string_view::npos) {
        fields.push_back(trim(sv.substr(start)));
        break;
      }
      fields.push_back(trim(sv.substr(start, comma - start)));
      start = comma + 1;
    }
    return fields;
  };

  const int n_fields = static_cast<int>(split_fields(lines[first]).size());
  if (n_fields < 2)
    throw DataError("'" + path + "' has " + std::to_string(n_fields) +
                    " column(s); need a label column plus at least one feature");
  int lc = label_column < 0 ? n_fields + label_column : label_column;
  if (lc < 0 || lc >= n_fields)
    throw ConfigError("label column " + std::to_string(label_column) +
                      " out of range for " + std::to_string(n_fields) + " columns");

  const int n = static_cast<int>(lines.size() - first);
  const int d = n_fields - 1;
  Dataset ds;
  ds.features.resize(n, d);
  std::vector<long long> raw_labels(n);

  for (int r = 0; r < n; ++r) {
    const int line_no = static_cast<int>(first) + r + 1;
    auto fields = split_fields(lines[first + r]);
    if (static_cast<int>(fields.size()) != n_fields)
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(n_fields) + " fields, got " +
                      std::to_string(fields.size()));
    int fc = 0;
    for (int c = 0; c < n_fields; ++c) {
      if (c == lc) {
        raw_labels[r] = parse_label(fields[c], line_no);
      } else {
        ds.features(r, fc++) = parse_double(fields[c], line_no, c);
      }
    }
  }
  canonicalize(raw_labels, ds);
  if (!header_names.empty()) {
    for (int c = 0; c < n_fields; ++c)
      if (c != lc) ds.feature_names.push_back(header_names[c]);
  }
  return ds;
}

Dataset load_sparse_svmlight(const std::string& path, int d_override) {
  auto lines = read_nonempty_lines(path);
  if (lines.empty()) throw DataError("'" + path + "' is empty");

  struct Row {
    long long label;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  int max_index = 0;

  for (size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    std::string_view sv = trim(lines[li]);
    // strip trailing comment
    if (size_t hash = sv.find('#'); hash != std::string_view::npos)
      sv = trim(sv.substr(0, hash));
    if (sv.empty()) continue;

    std::vector<std::string_view> toks;
    size_t pos = 0;
    while (pos < sv.size()) {
      while (pos < sv.size() && (sv[pos] == ' ' || sv[pos] == '\t')) ++pos;
      size_t end = pos;
      while (end < sv.size() && sv[end] != ' ' && sv[end] != '\t') ++end;
      if (end > pos) toks.push_back(sv.substr(pos, end - pos));
      pos = end;
    }
    if (toks.empty()) continue;

    Row row;
    row.label = parse_label(toks[0], line_no);
    int prev_index = 0;
    for (size_t t = 1; t < toks.size(); ++t) {
      size_t colon = toks[t].find(':');
      if (colon == std::string_view::npos)
        throw DataError("line " + std::to_string(line_no) + ": token '" +
                        std::string(toks[t]) + "' is not idx:value");
      int idx = static_cast<int>(parse_label(toks[t].substr(0, colon), line_no));
      if (idx < 1)
        throw DataError("line " + std::to_string(line_no) + ": index " +
                        std::to_string(idx) + " is below 1");
      if (idx <= prev_index)
        throw DataError("line " + std::to_string(line_no) +
                        ": indices must be strictly increasing (" +
                        std::to_string(idx) + " after " +
                        std::to_string(prev_index) + ")");
      double v = parse_double(toks[t].substr(colon + 1), line_no,
                              static_cast<int>(t));
      row.entries.emplace_back(idx, v);
      prev_index = idx;
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("'" + path + "' has no samples");

  int d = d_override > 0 ? d_override : max_index;
  if (d_override > 0 && max_index > d_override)
    throw DataError("index " + std::to_string(max_index) +
                    " exceeds declared dimension " + std::to_string(d_override));
  if (d < 1) throw DataError("'" + path + "' declares no feature indices");

  Dataset ds;
  ds.features = Eigen::MatrixXd::Zero(rows.size(), d);
  std::vector<long long> raw_labels(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    raw_labels[r] = rows[r].label;
    for (auto& [idx, v] : rows[r].entries) ds.features(r, idx - 1) = v;
  }
  canonicalize(raw_labels, ds);
  return ds;
}

void save_dense_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  char buf[64];
  for (int r = 0; r < ds.n(); ++r) {
    for (int c = 0; c < ds.d(); ++c) {
      format_full(buf, sizeof buf, ds.features(r, c));
      out << buf << ',';
    }
    out << ds.original_labels[ds.labels[r] - 1] << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void save_svmlight(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  char buf[64];
  for (int r = 0; r < ds.n(); ++r) {
    out << ds.original_labels[ds.labels[r] - 1];
    for (int c = 0; c < ds.d(); ++c) {
      double v = ds.features(r, c);
      if (v == 0.0) continue;
      format_full(buf, sizeof buf, v);
      out << ' ' << (c + 1) << ':' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset subset(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.features.resize(rows.size(), ds.d());
  out.labels.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= ds.n())
      throw ConfigError("split index " + std::to_string(rows[r]) + " out of range");
    out.features.row(r) = ds.features.row(rows[r]);
    out.labels.push_back(ds.labels[rows[r]]);
  }
  out.original_labels = ds.original_labels;
  out.feature_names = ds.feature_names;
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  std::vector<int> train_idx, test_idx;

  if (spec.train_indices || spec.test_indices) {
    if (!spec.train_indices || !spec.test_indices)
      throw ConfigError("explicit split needs both index lists");
    train_idx = *spec.train_indices;
    test_idx = *spec.test_indices;
    std::vector<char> seen(ds.n(), 0);
    for (int i : train_idx) {
      if (i < 0 || i >= ds.n()) throw ConfigError("train index out of range");
      seen[i] = 1;
    }
    for (int i : test_idx) {
      if (i < 0 || i >= ds.n()) throw ConfigError("test index out of range");
      if (seen[i]) throw ConfigError("index " + std::to_string(i) + " in both splits");
    }
  } else {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
      throw ConfigError("train_fraction must be in (0,1)");
    std::mt19937_64 rng(spec.seed);
    if (spec.stratified) {
      for (int c = 1; c <= ds.class_count(); ++c) {
        auto idx = ds.class_indices(c);
        std::shuffle(idx.begin(), idx.end(), rng);
        int take = static_cast<int>(spec.train_fraction * idx.size() + 0.5);
        take = std::min(take, static_cast<int>(idx.size()));
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + take);
        test_idx.insert(test_idx.end(), idx.begin() + take, idx.end());
      }
    } else {
      std::vector<int> idx(ds.n());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      int take = static_cast<int>(spec.train_fraction * ds.n() + 0.5);
      take = std::min(take, ds.n());
      train_idx.assign(idx.begin(), idx.begin() + take);
      test_idx.assign(idx.begin() + take, idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
  }

  if (train_idx.empty() || test_idx.empty())
    throw ConfigError("split leaves one side empty (n=" + std::to_string(ds.n()) +
                      ", fraction=" + std::to_string(spec.train_fraction) + ")");
  return {subset(ds, train_idx), subset(ds, test_idx)};
}

}  // namespace hdk
