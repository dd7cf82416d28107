#include "datagrid/synthetic.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "random.hpp"

namespace datagrid {
namespace {

std::string number_text(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string value_text(std::size_t part, std::size_t i) { return "p" + std::to_string(part) + "v" + std::to_string(i); }

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

std::size_t PlantSpec::grid_size() const {
  std::size_t g = 1;
  for (const auto& v : variables) g *= v.parts;
  return g;
}

void PlantSpec::validate() const {
  if (variables.size() < 2) throw std::invalid_argument("plant: at least two variables are required");
  if (n_records < 1) throw std::invalid_argument("plant: record count must be positive");
  double g = 1.0;
  for (const auto& v : variables) {
    if (v.parts < 1) throw std::invalid_argument("plant: variable " + v.name + " needs at least one part");
    if (v.kind == VariableKind::Categorical && v.values_per_part < 1) {
      throw std::invalid_argument("plant: variable " + v.name + " has more parts than values");
    }
    g *= static_cast<double>(v.parts);
  }
  if (g > 1e7) throw std::invalid_argument("plant: too many cells");
  if (cell_probabilities) {
    if (cell_probabilities->size() != grid_size()) throw std::invalid_argument("plant: cell tensor has the wrong size");
    double sum = 0.0;
    for (const double p : *cell_probabilities) {
      if (!(p >= 0.0)) throw std::invalid_argument("plant: negative cell probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("plant: cell probabilities must sum to 1");
  } else if (!(noise >= 0.0 && noise <= 1.0)) {
    throw std::invalid_argument("plant: noise must lie in [0, 1]");
  }
}

std::vector<double> PlantSpec::cell_distribution() const {
  if (cell_probabilities) return *cell_probabilities;
  const std::size_t G = grid_size();
  std::size_t D = variables.front().parts;
  for (const auto& v : variables) D = std::min(D, v.parts);
  std::vector<double> p(G, noise / static_cast<double>(G));
  for (std::size_t d = 0; d < D; ++d) {
    std::size_t idx = 0;
    for (const auto& v : variables) idx = idx * v.parts + d;
    p[idx] += (1.0 - noise) / static_cast<double>(D);
  }
  return p;
}

Planted generate(const PlantSpec& spec) {
  spec.validate();
  const std::size_t K = spec.variables.size();
  Schema schema;
  GroundTruth truth;
  for (const auto& v : spec.variables) {
    schema.variables.push_back({v.name, v.kind});
    TruthVariable t{v.name, v.kind, {}, {}};
    for (std::size_t p = 0; p < v.parts; ++p) {
      if (v.kind == VariableKind::Categorical) {
        for (std::size_t i = 0; i < v.values_per_part; ++i) t.value_part[value_text(p, i)] = p;
      } else {
        t.interval_bounds.emplace_back(static_cast<double>(p), static_cast<double>(p + 1));
      }
    }
    truth.variables.push_back(std::move(t));
  }
  schema.validate();

  const auto probs = spec.cell_distribution();
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());

  std::mt19937_64 rng(spec.seed);
  DatasetBuilder builder(schema);
  std::vector<std::size_t> cells;
  cells.reserve(static_cast<std::size_t>(spec.n_records));
  std::vector<std::string> row(K);
  std::vector<std::size_t> part(K);
  for (std::int64_t r = 0; r < spec.n_records; ++r) {
    const double u = detail::uniform_unit(rng) * cdf.back();
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    cell = std::min(cell, cdf.size() - 1);
    while (probs[cell] == 0.0 && cell > 0) --cell;  // guard against rounding onto an empty cell
    cells.push_back(cell);
    std::size_t rest = cell;
    for (std::size_t k = K; k-- > 0;) {
      part[k] = rest % spec.variables[k].parts;
      rest /= spec.variables[k].parts;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const auto& v = spec.variables[k];
      if (v.kind == VariableKind::Categorical) {
        row[k] = value_text(part[k], static_cast<std::size_t>(detail::uniform_below(rng, v.values_per_part)));
      } else if (v.values_per_part == 0) {
        row[k] = number_text(static_cast<double>(part[k]) + detail::uniform_unit(rng));
      } else {
        const auto i = detail::uniform_below(rng, v.values_per_part);
        row[k] = number_text(static_cast<double>(part[k]) +
                             static_cast<double>(i) / static_cast<double>(v.values_per_part));
      }
    }
    builder.add_row(std::span<const std::string>(row));
  }
  return Planted{std::move(builder).build(), std::move(truth), std::move(cells)};
}

std::vector<std::int32_t> GroundTruth::atom_labels(const Dataset& dataset, std::size_t k) const {
  const auto& t = variables.at(k);
  const Column& col = dataset.column(k);
  std::vector<std::int32_t> out(col.atom_count());
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (col.kind == VariableKind::Categorical) {
      const auto it = t.value_part.find(col.dictionary[a]);
      if (it == t.value_part.end()) throw std::invalid_argument("ground truth does not know value " + col.dictionary[a]);
      out[a] = static_cast<std::int32_t>(it->second);
    } else {
      const double x = col.blocks[a].value;
      const auto it = std::find_if(t.interval_bounds.begin(), t.interval_bounds.end(),
                                   [&](const auto& b) { return x >= b.first && x < b.second; });
      if (it == t.interval_bounds.end()) throw std::invalid_argument("ground truth has no interval for a value");
      out[a] = static_cast<std::int32_t>(it - t.interval_bounds.begin());
    }
  }
  return out;
}

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json doc;
  doc["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : variables) {
    nlohmann::ordered_json j;
    j["name"] = v.name;
    j["kind"] = std::string(to_string(v.kind));
    if (v.kind == VariableKind::Categorical) {
      j["value_part"] = nlohmann::ordered_json::object();
      for (const auto& [value, p] : v.value_part) j["value_part"][value] = p;
    } else {
      j["intervals"] = nlohmann::ordered_json::array();
      for (const auto& [lo, hi] : v.interval_bounds) j["intervals"].push_back({lo, hi});
    }
    doc["variables"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  GroundTruth out;
  for (const auto& j : doc.at("variables")) {
    TruthVariable v;
    v.name = j.at("name").get<std::string>();
    v.kind = parse_variable_kind(j.at("kind").get<std::string>());
    if (v.kind == VariableKind::Categorical) {
      for (const auto& [value, p] : j.at("value_part").items()) v.value_part[value] = p.get<std::size_t>();
    } else {
      for (const auto& b : j.at("intervals")) v.interval_bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    }
    out.variables.push_back(std::move(v));
  }
  return out;
}

double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: labelings have different sizes");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> joint;
  std::map<std::int32_t, std::int64_t> ca;
  std::map<std::int32_t, std::int64_t> cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ca[a[i]];
    ++cb[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, c] : joint) index += choose2(static_cast<double>(c));
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [key, c] : ca) sa += choose2(static_cast<double>(c));
  for (const auto& [key, c] : cb) sb += choose2(static_cast<double>(c));
  const double expected = n < 2 ? 0.0 : sa * sb / choose2(n);
  const double max_index = (sa + sb) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double recovery_ari(const GridModel& model, const GroundTruth& truth, std::size_t k) {
  return adjusted_rand_index(model.atom_parts(k), truth.atom_labels(model.dataset(), k));
}

}  // namespace datagrid
