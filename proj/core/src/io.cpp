#include "beaq/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "beaq/error.hpp"

namespace beaq::io {
namespace {

using nlohmann::json;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t parse_index(std::string_view text, std::size_t line) {
  const double v = parse_double(text, line);
  if (v < 0 || v != std::floor(v) || v > 4294967295.0) {
    throw FormatError("line " + std::to_string(line) + ": expected a non-negative integer, got '" +
                          std::string(text) + "'",
                      line);
  }
  return static_cast<std::size_t>(v);
}

json score_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double score_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw DataError("pool state: score must be a number or string");
}

}  // namespace

std::string encode_tensor(const SampleTensor& tensor) {
  std::string out;
  out.reserve(kTensorHeaderSize + 8 * tensor.values().size());
  out.append(kTensorMagic);
  put_le(out, kTensorVersion, 2);
  for (std::size_t dim : {tensor.n_points(), tensor.n_draws(), tensor.n_classes()}) {
    if (dim > 0xffffffffULL) throw DomainError("tensor dimension does not fit in 32 bits");
    put_le(out, dim, 4);
  }
  for (double v : tensor.values()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

SampleTensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < kTensorMagic.size() || bytes.substr(0, kTensorMagic.size()) != kTensorMagic) {
    throw FormatError("tensor file: bad magic at byte 0 (expected \"BEAQ1\")", 0);
  }
  if (bytes.size() < kTensorHeaderSize) {
    throw FormatError("tensor file: header truncated at byte " + std::to_string(bytes.size()),
                      bytes.size());
  }
  const auto version = get_le(bytes, 5, 2);
  if (version != kTensorVersion) {
    throw FormatError("tensor file: unsupported version " + std::to_string(version) + " at byte 5", 5);
  }
  const std::size_t n = get_le(bytes, 7, 4);
  const std::size_t m = get_le(bytes, 11, 4);
  const std::size_t c = get_le(bytes, 15, 4);
  const std::size_t count = n * m * c;
  const std::size_t expected = kTensorHeaderSize + 8 * count;
  if (bytes.size() < expected) {
    // Point at the first value that is missing or cut short.
    const std::size_t offset = kTensorHeaderSize + 8 * ((bytes.size() - kTensorHeaderSize) / 8);
    throw FormatError("tensor file: payload truncated at byte " + std::to_string(offset) + " (expected " +
                          std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()) + ")",
                      offset);
  }
  if (bytes.size() > expected) {
    throw FormatError("tensor file: trailing data at byte " + std::to_string(expected), expected);
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<double>(get_le(bytes, kTensorHeaderSize + 8 * i, 8));
  }
  return SampleTensor(n, m, c, std::move(values));
}

void write_tensor(const std::filesystem::path& path, const SampleTensor& tensor) {
  write_atomic(path, encode_tensor(tensor));
}

SampleTensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

SampleTensor parse_tensor_csv(std::istream& in) {
  struct Cell {
    std::size_t point, draw, cls;
    double p;
    std::size_t line;
  };
  std::vector<Cell> cells;
  std::size_t n = 0, m = 0, c = 0;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto fields = split_csv(text);
    if (fields.size() != 4) {
      throw FormatError("line " + std::to_string(line) + ": expected 4 fields, got " +
                            std::to_string(fields.size()),
                        line);
    }
    if (line == 1 && trim(fields[0]) == "point") continue;
    Cell cell{parse_index(trim(fields[0]), line), parse_index(trim(fields[1]), line),
              parse_index(trim(fields[2]), line), parse_double(trim(fields[3]), line), line};
    n = std::max(n, cell.point + 1);
    m = std::max(m, cell.draw + 1);
    c = std::max(c, cell.cls + 1);
    cells.push_back(cell);
  }
  if (cells.empty()) throw FormatError("tensor csv: no data rows", line);
  if (cells.size() != n * m * c) {
    throw DataError("tensor csv: " + std::to_string(cells.size()) + " cells for shape " +
                    std::to_string(n) + "x" + std::to_string(m) + "x" + std::to_string(c));
  }
  std::vector<double> values(n * m * c, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(values.size(), false);
  for (const auto& cell : cells) {
    const std::size_t at = (cell.point * m + cell.draw) * c + cell.cls;
    if (seen[at]) {
      throw FormatError("line " + std::to_string(cell.line) + ": duplicate cell (" +
                            std::to_string(cell.point) + ", " + std::to_string(cell.draw) + ", " +
                            std::to_string(cell.cls) + ")",
                        cell.line);
    }
    seen[at] = true;
    values[at] = cell.p;
  }
  return SampleTensor(n, m, c, std::move(values));
}

SampleTensor import_tensor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_tensor_csv(in);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(std::string_view text, std::size_t line) {
  const std::string s(trim(text));
  if (s.empty()) throw FormatError("line " + std::to_string(line) + ": empty number", line);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": not a number: '" + s + "'", line);
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string scores_csv(std::span<const double> scores) {
  std::string out = "index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(scores[i]);
    out += '\n';
  }
  return out;
}

std::vector<double> parse_scores_csv(std::istream& in) {
  std::vector<double> scores;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto fields = split_csv(text);
    if (fields.size() != 2) throw FormatError("line " + std::to_string(line) + ": expected index,score", line);
    if (line == 1 && trim(fields[0]) == "index") continue;
    if (parse_index(fields[0], line) != scores.size()) {
      throw FormatError("line " + std::to_string(line) + ": indices must run 0..N-1 in order", line);
    }
    scores.push_back(parse_double(fields[1], line));
  }
  return scores;
}

std::string marginals_csv(const BetaMarginals& marginals) {
  std::string out = "point,class,alpha,beta,mean,variance,flags\n";
  for (std::size_t n = 0; n < marginals.n_points(); ++n) {
    for (std::size_t c = 0; c < marginals.n_classes(); ++c) {
      const auto& mom = marginals.moments(n, c);
      out += std::to_string(n) + ',' + std::to_string(c) + ',' + format_double(marginals.alpha(n, c)) + ',' +
             format_double(marginals.beta(n, c)) + ',' + format_double(mom.moments.mean) + ',' +
             format_double(mom.moments.variance) + ',' + std::to_string(mom.flags) + '\n';
    }
  }
  return out;
}

std::string correlation_csv(std::span<const oracle::CorrelationReport> reports) {
  std::string out = "measure_a,measure_b,n_classes,n_points,repeats,rho_mean,rho_sd\n";
  for (const auto& r : reports) {
    for (const auto& p : r.pairs) {
      out += std::string(measure_name(p.a)) + ',' + std::string(measure_name(p.b)) + ',' +
             std::to_string(r.n_classes) + ',' + std::to_string(r.n_points) + ',' +
             std::to_string(r.repeats) + ',' + format_double(p.rho_mean) + ',' +
             (r.repeats > 1 ? format_double(p.rho_sd) : std::string()) + '\n';
    }
  }
  return out;
}

std::string rmse_csv(std::span<const RmseRow> rows) {
  std::string out = "n_classes,n_draws,repeats,rmse_mean,spearman_mean\n";
  for (const auto& row : rows) {
    out += std::to_string(row.n_classes) + ',' + std::to_string(row.n_draws) + ',' +
           std::to_string(row.report.rmse.size()) + ',' + format_double(row.report.rmse_mean) + ',' +
           format_double(row.report.rho_mean) + '\n';
  }
  return out;
}

std::string history_csv(const PoolState& state) {
  std::string out = "iteration,rank,index,score\n";
  for (const auto& entry : state.history()) {
    for (std::size_t r = 0; r < entry.selected.size(); ++r) {
      out += std::to_string(entry.iteration) + ',' + std::to_string(r) + ',' +
             std::to_string(entry.selected[r]) + ',' + format_double(entry.scores[r]) + '\n';
    }
  }
  return out;
}

std::string selection_csv(std::span<const std::size_t> selected, std::span<const double> scores) {
  std::string out = "rank,index,score\n";
  for (std::size_t r = 0; r < selected.size(); ++r) {
    if (selected[r] >= scores.size()) throw DomainError("selection_csv: index outside the score vector");
    out += std::to_string(r) + ',' + std::to_string(selected[r]) + ',' +
           format_double(scores[selected[r]]) + '\n';
  }
  return out;
}

std::string encode_pool_state(const PoolState& state) {
  json history = json::array();
  for (const auto& e : state.history()) {
    json scores = json::array();
    for (double s : e.scores) scores.push_back(score_to_json(s));
    history.push_back({{"iteration", e.iteration},
                       {"measure", std::string(measure_name(e.measure))},
                       {"seed", e.seed},
                       {"selected", e.selected},
                       {"scores", scores}});
  }
  const json doc = {{"format", "beaq-pool-state"},
                    {"version", 1},
                    {"n_total", state.n_total()},
                    {"initial_labeled", state.initial_labeled()},
                    {"history", history}};
  return doc.dump(1) + "\n";
}

PoolState decode_pool_state(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("pool state: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("format") != "beaq-pool-state" || doc.at("version") != 1) {
      throw DataError("pool state: unknown format or version");
    }
    std::vector<HistoryEntry> history;
    for (const auto& e : doc.at("history")) {
      HistoryEntry entry;
      entry.iteration = e.at("iteration").get<std::size_t>();
      entry.measure = parse_measure(e.at("measure").get<std::string>());
      entry.seed = e.at("seed").get<std::uint64_t>();
      entry.selected = e.at("selected").get<std::vector<std::size_t>>();
      for (const auto& s : e.at("scores")) entry.scores.push_back(score_from_json(s));
      if (entry.scores.size() != entry.selected.size()) {
        throw DataError("pool state: scores and selected differ in length");
      }
      history.push_back(std::move(entry));
    }
    const auto initial = doc.at("initial_labeled").get<std::vector<std::size_t>>();
    return PoolState::restore(doc.at("n_total").get<std::size_t>(), initial, std::move(history));
  } catch (const json::exception& e) {
    throw DataError(std::string("pool state: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
}

RunConfig RunConfig::parse(std::istream& in, std::span<const std::string_view> allowed) {
  RunConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line) + ": expected key = value");
    }
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("config line " + std::to_string(line) + ": unknown key '" + std::string(key) + "'");
    }
    if (cfg.has(key)) {
      throw ConfigError("config line " + std::to_string(line) + ": duplicate key '" + std::string(key) + "'");
    }
    cfg.set(key, std::string(value));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::span<const std::string_view> allowed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, allowed);
}

bool RunConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

void RunConfig::set(std::string_view key, std::string value) {
  values_.insert_or_assign(std::string(key), std::move(value));
}

std::optional<std::string> RunConfig::lookup(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::get_string(std::string_view key, std::string_view fallback) const {
  return lookup(key).value_or(std::string(fallback));
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const FormatError&) {
    throw ConfigError("config key '" + std::string(key) + "': not a number: '" + *v + "'");
  }
}

std::int64_t RunConfig::get_int(std::string_view key, std::int64_t fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const long long out = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE) {
    throw ConfigError("config key '" + std::string(key) + "': not an integer: '" + *v + "'");
  }
  return out;
}

std::uint64_t RunConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const unsigned long long out = std::strtoull(v->c_str(), &end, 10);
  if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size() || errno == ERANGE) {
    throw ConfigError("config key '" + std::string(key) + "': not an unsigned integer: '" + *v + "'");
  }
  return out;
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': not a boolean: '" + *v + "'");
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace beaq::io
