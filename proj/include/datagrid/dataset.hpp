#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace datagrid {

enum class VariableKind { Numerical, Categorical };

std::string_view to_string(VariableKind kind);
VariableKind parse_variable_kind(std::string_view text);

/// Reserved category for empty categorical fields.
inline constexpr std::string_view kMissingCategory = "⟨missing⟩";

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::Categorical;
};

struct Schema {
  std::vector<VariableSpec> variables;
  char delimiter = '\t';
  bool has_header = true;

  std::size_t size() const { return variables.size(); }
  /// Throws std::invalid_argument on duplicate/empty names or fewer than two variables.
  void validate() const;
  std::optional<std::size_t> find(std::string_view name) const;

  /// Parses a `name:kind` flag value.
  static VariableSpec parse_variable_flag(std::string_view flag);
  /// Reads `{"variables":[{"name":..,"kind":..}],"delimiter":..,"has_header":..}`.
  static Schema from_json_file(const std::filesystem::path& path);
};

/// Maximal run of equal raw values of a numerical variable, in rank space
/// [lo_rank, hi_rank) with ranks starting at 1.
struct TieBlock {
  double value = 0.0;
  std::int64_t lo_rank = 1;
  std::int64_t hi_rank = 2;
  std::int64_t size() const { return hi_rank - lo_rank; }
};

/// One column of a dataset. Every record maps to an "atom": the value id of a
/// categorical variable or the tie-block index of a numerical one. Partitions
/// are expressed over atoms.
struct Column {
  VariableKind kind = VariableKind::Categorical;

  // categorical
  std::vector<std::string> dictionary;  // value id -> text, first-appearance order
  std::vector<std::int64_t> value_counts;

  // numerical
  std::vector<double> raw;             // per record
  std::vector<std::int64_t> ranks;     // per record, 1..N, stable within ties
  std::vector<TieBlock> blocks;        // ascending value

  std::vector<std::int32_t> atom;       // per record
  std::vector<std::int64_t> atom_offsets;  // CSR over records grouped by atom
  std::vector<std::int32_t> atom_records;

  std::size_t atom_count() const {
    return kind == VariableKind::Categorical ? dictionary.size() : blocks.size();
  }
  std::int64_t atom_frequency(std::int32_t a) const {
    return atom_offsets[static_cast<std::size_t>(a) + 1] - atom_offsets[static_cast<std::size_t>(a)];
  }
  std::span<const std::int32_t> records_of(std::int32_t a) const {
    const auto lo = static_cast<std::size_t>(atom_offsets[static_cast<std::size_t>(a)]);
    const auto hi = static_cast<std::size_t>(atom_offsets[static_cast<std::size_t>(a) + 1]);
    return std::span<const std::int32_t>(atom_records).subspan(lo, hi - lo);
  }
  /// Tie-block containing a 1-based rank.
  std::int32_t block_of_rank(std::int64_t rank) const;
  /// Human-readable boundary between block b-1 and block b (midpoint of raw values).
  double cut_value(std::int32_t block) const;
};

/// Immutable typed table. Build it with DatasetBuilder or load_table.
class Dataset {
 public:
  const Schema& schema() const { return schema_; }
  std::int64_t n_records() const { return n_records_; }
  std::size_t n_variables() const { return columns_.size(); }
  std::int64_t dropped_rows() const { return dropped_rows_; }
  const Column& column(std::size_t k) const { return columns_[k]; }
  const VariableSpec& variable(std::size_t k) const { return schema_.variables[k]; }
  VariableKind kind(std::size_t k) const { return columns_[k].kind; }
  /// Throws std::invalid_argument for an unknown name.
  std::size_t variable_index(std::string_view name) const;
  /// Value id of a categorical value, if present.
  std::optional<std::int32_t> value_id(std::size_t k, std::string_view value) const;

  /// Rank position (numerical) or value id (categorical) of record i.
  std::int64_t record_field(std::size_t record, std::size_t k) const;

 private:
  friend class DatasetBuilder;
  Schema schema_;
  std::int64_t n_records_ = 0;
  std::int64_t dropped_rows_ = 0;
  std::vector<Column> columns_;
};

/// Incremental row-oriented construction, shared by the file loader and the
/// synthetic generator.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(Schema schema);

  /// Returns false when the row is dropped (unparseable numerical field).
  /// Throws std::invalid_argument when the field count differs from K.
  bool add_row(std::span<const std::string_view> fields);
  bool add_row(std::span<const std::string> fields);

  /// Throws std::runtime_error when no usable row was added.
  Dataset build() &&;

 private:
  Schema schema_;
  std::int64_t dropped_ = 0;
  std::vector<std::vector<std::string>> text_;   // categorical columns
  std::vector<std::vector<double>> numbers_;     // numerical columns
};

Dataset load_table(const std::filesystem::path& path, const Schema& schema);

/// Writes the dataset back as delimited text (raw values, header per schema).
void write_table(const Dataset& dataset, const std::filesystem::path& path);

/// Dictionary entries ordered by descending count, then value text.
std::vector<std::pair<std::string, std::int64_t>> value_counts(const Dataset& dataset,
                                                               std::string_view variable);

}  // namespace datagrid
