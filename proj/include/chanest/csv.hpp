#pragma once

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chanest/bench.hpp"

namespace chanest {

inline constexpr const char* kTrialCsvHeader =
    "experiment,algorithm,L,N,T,snr_db,trial,seed,mse,support_recovered,cpu_seconds,failed";

namespace detail {

/// Shortest representation that round-trips a double exactly; infinities
/// print as inf / -inf.
inline std::string format_real(double value) {
  char buffer[64];
  const int written = std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return std::string(buffer, static_cast<std::size_t>(written));
}

inline double parse_csv_real(std::string_view text, const std::filesystem::path& path) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw std::runtime_error("malformed real field '" + std::string(text) + "' in " +
                             path.string());
  return value;
}

template <typename Integer>
inline Integer parse_csv_integer(std::string_view text, const std::filesystem::path& path) {
  Integer value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw std::runtime_error("malformed integer field '" + std::string(text) + "' in " +
                             path.string());
  return value;
}

}  // namespace detail

inline std::string format_trial_record(const TrialRecord& record) {
  std::string row;
  row.reserve(160);
  row += record.experiment;
  row += ',';
  row += record.algorithm;
  row += ',';
  row += std::to_string(record.channel_length);
  row += ',';
  row += std::to_string(record.training_length);
  row += ',';
  row += std::to_string(record.sparsity);
  row += ',';
  row += detail::format_real(record.snr_db);
  row += ',';
  row += std::to_string(record.trial_index);
  row += ',';
  row += std::to_string(record.seed);
  row += ',';
  row += detail::format_real(record.mse);
  row += ',';
  row += record.support_recovered ? '1' : '0';
  row += ',';
  row += detail::format_real(record.cpu_seconds);
  row += ',';
  row += record.failed ? '1' : '0';
  return row;
}

/// Writes the record table atomically: a complete temporary file in the
/// destination directory is renamed over the target, so readers never see a
/// partial file.
inline void write_trial_csv(const std::filesystem::path& path,
                            const std::vector<TrialRecord>& records) {
  std::filesystem::path directory = path.parent_path();
  if (directory.empty()) directory = ".";
  const std::filesystem::path temp =
      directory / (path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot create temporary file " + temp.string());
    out << kTrialCsvHeader << '\n';
    for (const TrialRecord& record : records) {
      out << format_trial_record(record) << '\n';
    }
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(temp, ignored);
      throw std::runtime_error("write failed for temporary file " + temp.string());
    }
  }
  std::filesystem::rename(temp, path);
}

inline std::vector<TrialRecord> read_trial_csv(const std::filesystem::path& path) {
  std::ifstream input(path, std::ios::binary);
  if (!input) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(input, line) || line != kTrialCsvHeader)
    throw std::runtime_error("unexpected CSV header in " + path.string());

  std::vector<TrialRecord> records;
  while (std::getline(input, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view view = line;
    std::size_t begin = 0;
    while (true) {
      const std::size_t end = view.find(',', begin);
      if (end == std::string_view::npos) {
        fields.push_back(view.substr(begin));
        break;
      }
      fields.push_back(view.substr(begin, end - begin));
      begin = end + 1;
    }
    if (fields.size() != 12)
      throw std::runtime_error("expected 12 fields per row in " + path.string());

    TrialRecord record;
    record.experiment = std::string(fields[0]);
    record.algorithm = std::string(fields[1]);
    record.channel_length = detail::parse_csv_integer<int>(fields[2], path);
    record.training_length = detail::parse_csv_integer<int>(fields[3], path);
    record.sparsity = detail::parse_csv_integer<int>(fields[4], path);
    record.snr_db = detail::parse_csv_real(fields[5], path);
    record.trial_index = detail::parse_csv_integer<int>(fields[6], path);
    record.seed = detail::parse_csv_integer<std::uint64_t>(fields[7], path);
    record.mse = detail::parse_csv_real(fields[8], path);
    record.support_recovered = fields[9] == "1";
    record.cpu_seconds = detail::parse_csv_real(fields[10], path);
    record.failed = fields[11] == "1";
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace chanest
