#include "featforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace featforge {

TaskKind parse_task(std::string_view text) {
  if (text == "cls" || text == "classification") return TaskKind::classification;
  if (text == "reg" || text == "regression") return TaskKind::regression;
  if (text == "outlier" || text == "outlier_detection") return TaskKind::outlier_detection;
  throw std::invalid_argument("unknown task kind: " + std::string(text));
}

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::classification: return "classification";
    case TaskKind::regression: return "regression";
    case TaskKind::outlier_detection: return "outlier_detection";
  }
  return "unknown";
}

Dataset::Dataset(Eigen::MatrixXd samples, std::vector<std::string> feature_names,
                 std::vector<double> target, TaskKind task)
    : samples_(std::move(samples)),
      feature_names_(std::move(feature_names)),
      target_(std::move(target)),
      task_(task) {
  const auto m = rows();
  const auto n = cols();
  if (m < 2) throw DataError("dataset needs at least 2 rows, got " + std::to_string(m));
  if (n < 1) throw DataError("dataset needs at least 1 feature column");
  if (feature_names_.size() != n) throw DataError("feature name count does not match columns");
  if (target_.size() != m) throw DataError("target length does not match rows");
  if (!samples_.allFinite()) throw DataError("samples contain NaN or infinite values");
  std::set<std::string_view> seen;
  for (const auto& name : feature_names_) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name: " + name);
  }
  for (double t : target_) {
    if (!std::isfinite(t)) throw DataError("target contains NaN or infinite values");
    if (task_ != TaskKind::regression) {
      if (t < 0 || std::floor(t) != t)
        throw DataError("class labels must be non-negative integers");
      if (task_ == TaskKind::outlier_detection && t > 1)
        throw DataError("outlier labels must be 0 or 1");
    }
  }
}

std::optional<std::size_t> Dataset::find_feature(std::string_view name) const {
  for (std::size_t j = 0; j < feature_names_.size(); ++j) {
    if (feature_names_[j] == name) return j;
  }
  return std::nullopt;
}

Dataset Dataset::subset(std::span<const std::size_t> row_ids) const {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(row_ids.size()), samples_.cols());
  std::vector<double> t(row_ids.size());
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    s.row(static_cast<Eigen::Index>(i)) = samples_.row(static_cast<Eigen::Index>(row_ids[i]));
    t[i] = target_.at(row_ids[i]);
  }
  return Dataset(std::move(s), feature_names_, std::move(t), task_);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string quote_if_needed(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 TaskKind task, CsvLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV file: " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = std::string(trim(h));

  auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end())
    throw DataError("target column '" + std::string(target_column) + "' not in header");
  const auto target_idx = static_cast<std::size_t>(target_it - header.begin());
  if (header.size() < 2) throw DataError("CSV has no feature columns");

  std::vector<std::vector<std::string>> records;
  std::size_t read = 0;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++read;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(read) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    bool missing = std::any_of(cells.begin(), cells.end(),
                               [](const std::string& c) { return trim(c).empty(); });
    if (missing) {
      ++dropped;
      continue;
    }
    records.push_back(std::move(cells));
  }
  if (records.size() < 2)
    throw DataError("fewer than 2 complete rows remain in " + path.string());

  const std::size_t m = records.size();
  const std::size_t ncols = header.size();
  std::vector<std::vector<double>> values(ncols, std::vector<double>(m));
  std::vector<std::string> encoded;
  for (std::size_t c = 0; c < ncols; ++c) {
    bool numeric = true;
    for (std::size_t r = 0; r < m && numeric; ++r) {
      auto v = parse_number(records[r][c]);
      if (!v) numeric = false;
      else values[c][r] = *v;
    }
    if (!numeric) {
      std::unordered_map<std::string, double> codes;
      for (std::size_t r = 0; r < m; ++r) {
        std::string key(trim(records[r][c]));
        auto [it, inserted] = codes.try_emplace(key, static_cast<double>(codes.size()));
        values[c][r] = it->second;
      }
      encoded.push_back(header[c]);
    }
  }

  Eigen::MatrixXd samples(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(ncols - 1));
  std::vector<std::string> names;
  Eigen::Index out_col = 0;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == target_idx) continue;
    for (std::size_t r = 0; r < m; ++r) samples(static_cast<Eigen::Index>(r), out_col) = values[c][r];
    names.push_back(header[c]);
    ++out_col;
  }
  if (stats) {
    stats->rows_read = read;
    stats->rows_dropped = dropped;
    stats->encoded_columns = std::move(encoded);
  }
  return Dataset(std::move(samples), std::move(names), std::move(values[target_idx]), task);
}

void write_csv(const Dataset& data, const std::filesystem::path& path, std::string_view target_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& name : data.feature_names()) out << quote_if_needed(name) << ',';
  out << quote_if_needed(target_name) << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.samples()(static_cast<Eigen::Index>(r),
                                                             static_cast<Eigen::Index>(c)));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.target()[r]);
    out << buf << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

namespace {

// Row ids grouped per stratum (class value ascending), each shuffled.
std::vector<std::vector<std::size_t>> strata(const Dataset& data, Rng& rng) {
  std::vector<std::vector<std::size_t>> groups;
  if (data.task() == TaskKind::regression) {
    groups.emplace_back(data.rows());
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  } else {
    std::map<double, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.target()[i]].push_back(i);
    for (auto& [label, ids] : by_class) groups.push_back(std::move(ids));
  }
  for (auto& g : groups) std::shuffle(g.begin(), g.end(), rng.engine());
  return groups;
}

}  // namespace

SplitPlan make_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  Rng rng(seed);
  auto groups = strata(data, rng);
  const std::size_t m = data.rows();

  auto total = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  total = std::clamp<std::size_t>(total, 1, m - 1);

  // Largest-remainder allocation of the test budget across strata, keeping at
  // least one row of every stratum in train.
  std::vector<std::size_t> quota(groups.size());
  std::vector<double> remainder(groups.size());
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double exact = test_fraction * static_cast<double>(groups[g].size());
    quota[g] = std::min(static_cast<std::size_t>(std::floor(exact)), groups[g].size() - 1);
    remainder[g] = exact - std::floor(exact);
    assigned += quota[g];
  }
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t pass = 0; pass < 2 && assigned < total; ++pass) {
    for (std::size_t g : order) {
      if (assigned >= total) break;
      if (quota[g] + 1 >= groups[g].size()) continue;
      if (pass == 0 && remainder[g] <= 0.0) continue;
      ++quota[g];
      ++assigned;
    }
  }

  SplitPlan plan;
  plan.seed = seed;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = 0; i < groups[g].size(); ++i) {
      (i < quota[g] ? plan.test_indices : plan.train_indices).push_back(groups[g][i]);
    }
  }
  if (plan.test_indices.empty() || plan.train_indices.empty())
    throw DataError("split leaves one side empty");
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

SplitPlan make_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  if (k > data.rows()) throw std::invalid_argument("more folds than rows");
  Rng rng(seed);
  auto groups = strata(data, rng);

  // Deal the class-ordered sequence round-robin so every fold gets an almost
  // equal share of each class.
  std::vector<std::vector<std::size_t>> test(k);
  std::size_t pos = 0;
  for (const auto& g : groups) {
    for (std::size_t id : g) test[pos++ % k].push_back(id);
  }

  SplitPlan plan;
  plan.seed = seed;
  std::vector<std::size_t> fold_of(data.rows());
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t id : test[f]) fold_of[id] = f;
  }
  for (std::size_t f = 0; f < k; ++f) {
    Fold fold;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      (fold_of[i] == f ? fold.test : fold.train).push_back(i);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace featforge
