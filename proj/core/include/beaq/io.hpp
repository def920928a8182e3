#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beaq/active_loop.hpp"
#include "beaq/beta_model.hpp"
#include "beaq/oracle.hpp"
#include "beaq/sample_tensor.hpp"

namespace beaq::io {

// Tensor file: "BEAQ1", u16 version, u32 N, M, C, then N*M*C little-endian
// f64 values in (point, draw, class) order.
inline constexpr std::string_view kTensorMagic = "BEAQ1";
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderSize = 19;

std::string encode_tensor(const SampleTensor& tensor);
/// Throws FormatError with the byte offset where parsing failed, or
/// DataError (via SampleTensor) naming the first bad (point, draw).
SampleTensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const SampleTensor& tensor);
SampleTensor read_tensor(const std::filesystem::path& path);

/// Long-format CSV "point,draw,class,probability" (header optional). Every
/// (point, draw, class) cell must appear exactly once; order is free.
SampleTensor parse_tensor_csv(std::istream& in);
SampleTensor import_tensor_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest text that parses back to the same double (17 significant
/// digits); "inf", "-inf", "nan" for non-finite values.
std::string format_double(double value);
/// Throws FormatError (offset = `line`) on anything but a full number.
double parse_double(std::string_view text, std::size_t line = 0);

/// Splits one CSV line on commas. No quoting: none of our formats need it.
std::vector<std::string_view> split_csv(std::string_view line);

// ---- CSV outputs ----------------------------------------------------------

std::string scores_csv(std::span<const double> scores);
/// Reads "index,score"; indices must be 0..N-1 in order.
std::vector<double> parse_scores_csv(std::istream& in);

std::string marginals_csv(const BetaMarginals& marginals);

std::string correlation_csv(std::span<const oracle::CorrelationReport> reports);

struct RmseRow {
  std::size_t n_classes = 0;
  std::size_t n_draws = 0;
  oracle::RmseReport report;
};
std::string rmse_csv(std::span<const RmseRow> rows);

/// "iteration,rank,index,score", one row per selected index.
std::string history_csv(const PoolState& state);

/// "rank,index,score"; scores is indexed by pool position, not by rank.
std::string selection_csv(std::span<const std::size_t> selected, std::span<const double> scores);

// ---- pool state -----------------------------------------------------------

std::string encode_pool_state(const PoolState& state);
PoolState decode_pool_state(std::string_view json_text);

// ---- run config -----------------------------------------------------------

/// Plain "key = value" lines; '#' starts a comment. Keys outside `allowed`
/// and repeated keys are rejected with a ConfigError naming the line.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig parse(std::istream& in, std::span<const std::string_view> allowed);
  static RunConfig load(const std::filesystem::path& path, std::span<const std::string_view> allowed);

  bool has(std::string_view key) const;
  void set(std::string_view key, std::string value);

  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  /// Sorted "key = value" lines, suitable for echoing next to outputs.
  std::string dump() const;

 private:
  std::optional<std::string> lookup(std::string_view key) const;
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace beaq::io
