#include "datagrid/dataset.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace datagrid {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_finite(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void build_atom_index(Column& col, std::int64_t n) {
  const std::size_t atoms = col.atom_count();
  col.atom_offsets.assign(atoms + 1, 0);
  for (const auto a : col.atom) ++col.atom_offsets[static_cast<std::size_t>(a) + 1];
  std::partial_sum(col.atom_offsets.begin(), col.atom_offsets.end(), col.atom_offsets.begin());
  col.atom_records.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> cursor(col.atom_offsets.begin(), col.atom_offsets.end() - 1);
  if (col.kind == VariableKind::Numerical) {
    // records of a tie-block in rank order
    std::vector<std::int32_t> by_rank(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) by_rank[static_cast<std::size_t>(col.ranks[static_cast<std::size_t>(i)] - 1)] = static_cast<std::int32_t>(i);
    for (const auto r : by_rank) {
      const auto a = static_cast<std::size_t>(col.atom[static_cast<std::size_t>(r)]);
      col.atom_records[static_cast<std::size_t>(cursor[a]++)] = r;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(col.atom[static_cast<std::size_t>(i)]);
      col.atom_records[static_cast<std::size_t>(cursor[a]++)] = static_cast<std::int32_t>(i);
    }
  }
}

}  // namespace

std::string_view to_string(VariableKind kind) {
  return kind == VariableKind::Numerical ? "numerical" : "categorical";
}

VariableKind parse_variable_kind(std::string_view text) {
  if (text == "numerical" || text == "num" || text == "numeric") return VariableKind::Numerical;
  if (text == "categorical" || text == "cat") return VariableKind::Categorical;
  throw std::invalid_argument("unknown variable kind '" + std::string(text) + "'");
}

void Schema::validate() const {
  if (variables.size() < 2) throw std::invalid_argument("schema needs at least 2 variables");
  std::unordered_set<std::string> seen;
  for (const auto& v : variables) {
    if (v.name.empty()) throw std::invalid_argument("schema has an empty variable name");
    if (!seen.insert(v.name).second) throw std::invalid_argument("duplicate variable name '" + v.name + "'");
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (variables[k].name == name) return k;
  }
  return std::nullopt;
}

VariableSpec Schema::parse_variable_flag(std::string_view flag) {
  const auto pos = flag.rfind(':');
  if (pos == std::string_view::npos || pos == 0) {
    throw std::invalid_argument("--var expects name:kind, got '" + std::string(flag) + "'");
  }
  return VariableSpec{std::string(flag.substr(0, pos)), parse_variable_kind(flag.substr(pos + 1))};
}

Schema Schema::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema config " + path.string());
  const auto doc = nlohmann::json::parse(in);
  Schema schema;
  for (const auto& v : doc.at("variables")) {
    schema.variables.push_back({v.at("name").get<std::string>(), parse_variable_kind(v.at("kind").get<std::string>())});
  }
  if (doc.contains("delimiter")) {
    const auto d = doc.at("delimiter").get<std::string>();
    if (d.size() != 1) throw std::invalid_argument("delimiter must be a single character");
    schema.delimiter = d[0];
  }
  if (doc.contains("has_header")) schema.has_header = doc.at("has_header").get<bool>();
  schema.validate();
  return schema;
}

std::int32_t Column::block_of_rank(std::int64_t rank) const {
  const auto it = std::upper_bound(blocks.begin(), blocks.end(), rank,
                                   [](std::int64_t r, const TieBlock& b) { return r < b.hi_rank; });
  if (it == blocks.end()) throw std::out_of_range("rank outside the variable's range");
  return static_cast<std::int32_t>(it - blocks.begin());
}

double Column::cut_value(std::int32_t block) const {
  const auto b = static_cast<std::size_t>(block);
  if (b == 0) return blocks.front().value;
  if (b >= blocks.size()) return blocks.back().value;
  return 0.5 * (blocks[b - 1].value + blocks[b].value);
}

std::size_t Dataset::variable_index(std::string_view name) const {
  if (const auto k = schema_.find(name)) return *k;
  throw std::invalid_argument("unknown variable '" + std::string(name) + "'");
}

std::optional<std::int32_t> Dataset::value_id(std::size_t k, std::string_view value) const {
  const auto& dict = columns_[k].dictionary;
  const auto it = std::find(dict.begin(), dict.end(), value);
  if (it == dict.end()) return std::nullopt;
  return static_cast<std::int32_t>(it - dict.begin());
}

std::int64_t Dataset::record_field(std::size_t record, std::size_t k) const {
  const auto& col = columns_[k];
  return col.kind == VariableKind::Numerical ? col.ranks[record] : col.atom[record];
}

DatasetBuilder::DatasetBuilder(Schema schema) : schema_(std::move(schema)) {
  schema_.validate();
  text_.resize(schema_.size());
  numbers_.resize(schema_.size());
}

bool DatasetBuilder::add_row(std::span<const std::string_view> fields) {
  if (fields.size() != schema_.size()) {
    throw std::invalid_argument("row has " + std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(schema_.size()));
  }
  std::vector<double> parsed(schema_.size(), 0.0);
  for (std::size_t k = 0; k < schema_.size(); ++k) {
    if (schema_.variables[k].kind != VariableKind::Numerical) continue;
    const auto value = parse_finite(fields[k]);
    if (!value) {
      ++dropped_;
      return false;
    }
    parsed[k] = *value;
  }
  for (std::size_t k = 0; k < schema_.size(); ++k) {
    if (schema_.variables[k].kind == VariableKind::Numerical) {
      numbers_[k].push_back(parsed[k]);
    } else {
      const auto field = fields[k];
      const bool empty = trim(field).empty();
      text_[k].emplace_back(empty ? std::string(kMissingCategory) : std::string(field));
    }
  }
  return true;
}

bool DatasetBuilder::add_row(std::span<const std::string> fields) {
  std::vector<std::string_view> views(fields.begin(), fields.end());
  return add_row(std::span<const std::string_view>(views));
}

Dataset DatasetBuilder::build() && {
  Dataset ds;
  ds.schema_ = std::move(schema_);
  ds.dropped_rows_ = dropped_;
  const std::size_t K = ds.schema_.size();
  std::int64_t n = 0;
  for (std::size_t k = 0; k < K; ++k) {
    n = static_cast<std::int64_t>(ds.schema_.variables[k].kind == VariableKind::Numerical ? numbers_[k].size()
                                                                                          : text_[k].size());
  }
  if (n == 0) throw std::runtime_error("no usable rows");
  if (n > std::numeric_limits<std::int32_t>::max()) throw std::runtime_error("too many records");
  ds.n_records_ = n;
  ds.columns_.resize(K);

  for (std::size_t k = 0; k < K; ++k) {
    Column& col = ds.columns_[k];
    col.kind = ds.schema_.variables[k].kind;
    col.atom.resize(static_cast<std::size_t>(n));
    if (col.kind == VariableKind::Categorical) {
      std::unordered_map<std::string, std::int32_t> ids;
      for (std::int64_t i = 0; i < n; ++i) {
        auto& text = text_[k][static_cast<std::size_t>(i)];
        auto [it, inserted] = ids.try_emplace(text, static_cast<std::int32_t>(col.dictionary.size()));
        if (inserted) {
          col.dictionary.push_back(text);
          col.value_counts.push_back(0);
        }
        col.atom[static_cast<std::size_t>(i)] = it->second;
        ++col.value_counts[static_cast<std::size_t>(it->second)];
      }
      text_[k].clear();
      text_[k].shrink_to_fit();
    } else {
      col.raw = std::move(numbers_[k]);
      std::vector<std::int32_t> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return col.raw[static_cast<std::size_t>(a)] < col.raw[static_cast<std::size_t>(b)];
      });
      col.ranks.resize(static_cast<std::size_t>(n));
      for (std::int64_t pos = 0; pos < n; ++pos) {
        const auto rec = static_cast<std::size_t>(order[static_cast<std::size_t>(pos)]);
        const double v = col.raw[rec];
        col.ranks[rec] = pos + 1;
        if (col.blocks.empty() || col.blocks.back().value != v) {
          col.blocks.push_back(TieBlock{v, pos + 1, pos + 2});
        } else {
          col.blocks.back().hi_rank = pos + 2;
        }
        col.atom[rec] = static_cast<std::int32_t>(col.blocks.size() - 1);
      }
    }
    build_atom_index(col, n);
  }
  return ds;
}

Dataset load_table(const std::filesystem::path& path, const Schema& schema) {
  schema.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open table " + path.string());
  DatasetBuilder builder(schema);
  std::string line;
  bool header_pending = schema.has_header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, schema.delimiter);
    if (header_pending) {
      header_pending = false;
      bool match = fields.size() == schema.size();
      for (std::size_t k = 0; match && k < fields.size(); ++k) {
        match = trim(fields[k]) == schema.variables[k].name;
      }
      if (!match) throw std::runtime_error("header does not match the schema in " + path.string());
      continue;
    }
    try {
      builder.add_row(std::span<const std::string_view>(fields));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return std::move(builder).build();
}

void write_table(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& schema = dataset.schema();
  const char d = schema.delimiter;
  if (schema.has_header) {
    for (std::size_t k = 0; k < schema.size(); ++k) out << (k ? std::string(1, d) : "") << schema.variables[k].name;
    out << '\n';
  }
  std::array<char, 64> buf{};
  for (std::int64_t i = 0; i < dataset.n_records(); ++i) {
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (k) out << d;
      const auto& col = dataset.column(k);
      const auto r = static_cast<std::size_t>(i);
      if (col.kind == VariableKind::Numerical) {
        const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), col.raw[r]);
        out.write(buf.data(), end - buf.data());
      } else {
        const auto& text = col.dictionary[static_cast<std::size_t>(col.atom[r])];
        if (text.find(d) != std::string::npos || text.find('\n') != std::string::npos) {
          throw std::runtime_error("value '" + text + "' contains the delimiter");
        }
        if (text != kMissingCategory) out << text;
      }
    }
    out << '\n';
  }
}

std::vector<std::pair<std::string, std::int64_t>> value_counts(const Dataset& dataset, std::string_view variable) {
  const auto k = dataset.variable_index(variable);
  const auto& col = dataset.column(k);
  if (col.kind != VariableKind::Categorical) {
    throw std::invalid_argument("value_counts: '" + std::string(variable) + "' is numerical");
  }
  std::vector<std::pair<std::string, std::int64_t>> out;
  out.reserve(col.dictionary.size());
  for (std::size_t v = 0; v < col.dictionary.size(); ++v) out.emplace_back(col.dictionary[v], col.value_counts[v]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

}  // namespace datagrid
