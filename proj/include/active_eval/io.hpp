#pragma once

// File formats:
//   predictions  CSV, header `id,p_0,...,p_{C-1}`; C comes from the header
//   labels       CSV, header `id,label`
//   logs         JSON lines: one header object, then one object per step
// Lines starting with '#' are comments. Doubles are written with 17
// significant digits so that emit -> ingest reproduces every bit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "active_eval/acquisition.hpp"
#include "active_eval/core.hpp"

namespace active_eval::io {

std::string format_double(double value);
double parse_double(std::string_view text);

/// Splits one CSV record with RFC 4180 quoting. Embedded newlines are not
/// supported.
std::vector<std::string> split_csv(std::string_view line);
std::string quote_csv(std::string_view field);

/// Reads all content lines of a text stream, dropping '#' comments, blank
/// lines and trailing '\r'.
std::vector<std::string> content_lines(std::istream& in);

struct IdTable {
  std::vector<std::string> ids;
  PredictionTable table;
};

IdTable read_predictions(std::istream& in);
IdTable read_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const std::vector<std::string>& ids,
                       const PredictionTable& table);

using LabelRows = std::vector<std::pair<std::string, std::size_t>>;

LabelRows read_labels(std::istream& in);
LabelRows read_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const LabelRows& rows);

struct LogFile {
  AcquisitionLog log;
  LossSpec loss;
  std::vector<std::string> ids;  // pool id of each record
};

void write_log(std::ostream& out, const AcquisitionLog& log, const LossSpec& loss,
               const std::vector<std::string>& pool_ids);
LogFile read_log(std::istream& in);
LogFile read_log(const std::filesystem::path& path);

/// "# active-eval v1 seed=<seed>" line placed at the top of CSV outputs.
std::string seed_comment(std::uint64_t seed);

}  // namespace active_eval::io
