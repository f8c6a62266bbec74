#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "advcontract/errors.hpp"
#include "advcontract/rng.hpp"

namespace advc::dp {

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};
class DuplicateQueryType : public Error {
 public:
  using Error::Error;
};
class UnknownColumn : public Error {
 public:
  using Error::Error;
};
class BadDataset : public Error {
 public:
  using Error::Error;
};

struct ColumnBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Numeric table with declared per-column bounds; the row count is public.
class Dataset {
 public:
  Dataset(std::vector<std::string> columns, std::vector<std::vector<double>> rows,
          std::vector<ColumnBounds> bounds)
      : columns_(std::move(columns)), rows_(std::move(rows)), bounds_(std::move(bounds)) {
    if (rows_.empty()) throw BadDataset("dataset is empty");
    if (bounds_.size() != columns_.size()) throw BadDataset("every column needs bounds");
    for (const auto& row : rows_) {
      if (row.size() != columns_.size()) throw BadDataset("ragged row");
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] < bounds_[c].lo || row[c] > bounds_[c].hi) {
          throw BadDataset("value out of declared bounds in column " + columns_[c]);
        }
      }
    }
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (columns_[c] == name) return c;
    }
    throw UnknownColumn("unknown column: " + name);
  }
  const ColumnBounds& bounds(std::size_t c) const { return bounds_[c]; }

  double sum(std::size_t c) const {
    double s = 0.0;
    for (const auto& row : rows_) s += row[c];
    return s;
  }

  /// Copy with row `r` removed (a neighbouring dataset).
  Dataset without_row(std::size_t r) const {
    auto rows = rows_;
    rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(r));
    return Dataset(columns_, std::move(rows), bounds_);
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::vector<ColumnBounds> bounds_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

inline double parse_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw BadDataset("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// Header row + numeric rows; bounds sidecar has rows "column,lo,hi".
inline Dataset load_dataset(std::istream& data, std::istream& bounds_csv) {
  std::string line;
  if (!std::getline(data, line)) throw BadDataset("missing header");
  auto columns = detail::split_csv_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(data, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    for (const auto& cell : detail::split_csv_line(line)) row.push_back(detail::parse_number(cell));
    rows.push_back(std::move(row));
  }
  std::map<std::string, ColumnBounds> declared;
  while (std::getline(bounds_csv, line)) {
    auto cells = detail::split_csv_line(line);
    if (cells.empty() || cells[0].empty() || cells[0] == "column") continue;
    if (cells.size() != 3) throw BadDataset("bounds rows are column,lo,hi");
    declared[cells[0]] = {detail::parse_number(cells[1]), detail::parse_number(cells[2])};
  }
  std::vector<ColumnBounds> bounds;
  for (const auto& c : columns) {
    auto it = declared.find(c);
    if (it == declared.end()) throw BadDataset("no bounds declared for column " + c);
    bounds.push_back(it->second);
  }
  return Dataset(std::move(columns), std::move(rows), std::move(bounds));
}

enum class QueryKind { kCount, kSum, kMean };

struct Query {
  QueryKind kind = QueryKind::kCount;
  std::string column;  // unused for count
  double eps = 0.0;

  /// One query of each type per bundle; a type is the kind plus its column.
  std::string type_key() const {
    switch (kind) {
      case QueryKind::kCount: return "count";
      case QueryKind::kSum: return "sum(" + column + ")";
      case QueryKind::kMean: return "mean(" + column + ")";
    }
    return "?";
  }
};

inline Query parse_query(const std::string& kind, const std::string& column, double eps) {
  Query q;
  if (kind == "count") {
    q.kind = QueryKind::kCount;
  } else if (kind == "sum") {
    q.kind = QueryKind::kSum;
  } else if (kind == "mean") {
    q.kind = QueryKind::kMean;
  } else {
    throw Error("unknown query kind: " + kind);
  }
  q.column = column;
  q.eps = eps;
  return q;
}

/// Per-buyer privacy budget: what was bought and what each query type used.
struct BudgetLedger {
  std::string buyer;
  double purchased = 0.0;
  std::map<std::string, double> consumed;

  double spent() const {
    double s = 0.0;
    for (const auto& [_, e] : consumed) s += e;
    return s;
  }
  double remaining() const { return purchased - spent(); }
};

/// Exact answer and L1 sensitivity of a query.
struct QueryTruth {
  double value = 0.0;
  double sensitivity = 0.0;
};

inline QueryTruth evaluate(const Query& q, const Dataset& ds) {
  const double rows = static_cast<double>(ds.rows());
  switch (q.kind) {
    case QueryKind::kCount: return {rows, 1.0};
    case QueryKind::kSum: {
      auto c = ds.column(q.column);
      return {ds.sum(c), ds.bounds(c).hi - ds.bounds(c).lo};
    }
    case QueryKind::kMean: {
      auto c = ds.column(q.column);
      return {ds.sum(c) / rows, (ds.bounds(c).hi - ds.bounds(c).lo) / rows};
    }
  }
  return {};
}

/// f(D) + Laplace(sensitivity / eps_i). The ledger is only updated when the
/// answer is released.
inline double answer_query(BudgetLedger& ledger, const Query& q, const Dataset& ds, std::uint64_t seed) {
  if (!(q.eps > 0.0)) throw DomainError("query privacy level must be > 0");
  const auto key = q.type_key();
  if (ledger.consumed.count(key) != 0) throw DuplicateQueryType("query type already used: " + key);
  if (ledger.spent() + q.eps > ledger.purchased + 1e-12) {
    throw BudgetExceeded("budget exceeded for buyer " + ledger.buyer);
  }
  const auto truth = evaluate(q, ds);  // may throw UnknownColumn
  SplitMix64 rng(seed);
  const double noisy = truth.value + rng.laplace(truth.sensitivity / q.eps);
  ledger.consumed[key] = q.eps;
  return noisy;
}

/// Query engine with an append-only JSON-lines journal that can be replayed
/// to rebuild every buyer's ledger.
class QueryEngine {
 public:
  explicit QueryEngine(Dataset ds) : ds_(std::move(ds)) {}

  /// Replays `path` (if it exists) and appends new events to it.
  void attach_journal(const std::string& path) {
    {
      std::ifstream in(path);
      std::string line;
      while (in && std::getline(in, line)) {
        if (line.empty()) continue;
        apply(nlohmann::json::parse(line));
      }
    }
    journal_.open(path, std::ios::app);
    if (!journal_) throw Error("cannot open journal " + path);
  }

  void purchase(const std::string& buyer, double eps) {
    std::lock_guard lock(mu_);
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("purchased privacy level must lie in (0, 1]");
    if (ledgers_.count(buyer) != 0) throw Error("buyer " + buyer + " already holds a bundle");
    ledgers_[buyer] = BudgetLedger{buyer, eps, {}};
    write({{"op", "purchase"}, {"buyer", buyer}, {"eps", eps}});
  }

  double ask(const std::string& buyer, const Query& q, std::uint64_t seed) {
    std::lock_guard lock(mu_);
    auto it = ledgers_.find(buyer);
    if (it == ledgers_.end()) throw Error("buyer " + buyer + " holds no bundle");
    double v = answer_query(it->second, q, ds_, seed);
    write({{"op", "query"}, {"buyer", buyer}, {"type", q.type_key()}, {"eps", q.eps}});
    return v;
  }

  std::optional<BudgetLedger> ledger(const std::string& buyer) const {
    std::lock_guard lock(mu_);
    auto it = ledgers_.find(buyer);
    if (it == ledgers_.end()) return std::nullopt;
    return it->second;
  }

  const Dataset& dataset() const { return ds_; }

 private:
  void apply(const nlohmann::json& e) {
    const auto op = e.at("op").get<std::string>();
    const auto buyer = e.at("buyer").get<std::string>();
    if (op == "purchase") {
      ledgers_[buyer] = BudgetLedger{buyer, e.at("eps").get<double>(), {}};
    } else if (op == "query") {
      ledgers_.at(buyer).consumed[e.at("type").get<std::string>()] = e.at("eps").get<double>();
    } else {
      throw Error("unknown journal op: " + op);
    }
  }

  void write(const nlohmann::json& e) {
    if (journal_.is_open()) {
      journal_ << e.dump() << '\n';
      journal_.flush();
    }
  }

  Dataset ds_;
  std::map<std::string, BudgetLedger> ledgers_;
  std::ofstream journal_;
  mutable std::mutex mu_;
};

}  // namespace advc::dp
