#include "active_eval/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "active_eval/estimators.hpp"

namespace active_eval::io {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("'" + std::string(text) + "' is not a number");
  }
  return value;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_csv(std::string_view field) {
  // A leading '#' would otherwise read back as a comment line.
  if (field.find_first_of(",\"\r\n") == std::string_view::npos &&
      (field.empty() || field.front() != '#')) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> content_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

IdTable read_predictions(std::istream& in) {
  const auto lines = content_lines(in);
  if (lines.empty()) throw ValidationError("prediction file is empty");
  const auto header = split_csv(lines.front());
  if (header.size() < 3 || header[0] != "id") {
    throw ValidationError("prediction header must be id,p_0,...,p_{C-1}");
  }
  const std::size_t C = header.size() - 1;
  for (std::size_t c = 0; c < C; ++c) {
    if (header[c + 1] != "p_" + std::to_string(c)) {
      throw ValidationError("prediction header column " + std::to_string(c + 1) + " must be p_" +
                            std::to_string(c));
    }
  }
  IdTable out;
  std::vector<double> values;
  values.reserve((lines.size() - 1) * C);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv(lines[r]);
    if (fields.size() != C + 1) {
      throw ValidationError("row " + std::to_string(r - 1) + ": expected " + std::to_string(C + 1) +
                            " fields, got " + std::to_string(fields.size()));
    }
    out.ids.push_back(fields[0]);
    for (std::size_t c = 0; c < C; ++c) {
      try {
        values.push_back(parse_double(fields[c + 1]));
      } catch (const ValidationError& e) {
        throw ValidationError("row " + std::to_string(r - 1) + ": " + e.what());
      }
    }
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : out.ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "' in predictions");
  }
  out.table = validate_table(C, std::move(values));
  return out;
}

IdTable read_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_predictions(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_predictions(std::ostream& out, const std::vector<std::string>& ids,
                       const PredictionTable& table) {
  if (ids.size() != table.num_inputs()) throw ShapeError("one id per table row is required");
  out << "id";
  for (std::size_t c = 0; c < table.num_classes(); ++c) out << ",p_" << c;
  out << '\n';
  for (std::size_t r = 0; r < table.num_inputs(); ++r) {
    out << quote_csv(ids[r]);
    for (double p : table.row(r)) out << ',' << format_double(p);
    out << '\n';
  }
}

LabelRows read_labels(std::istream& in) {
  const auto lines = content_lines(in);
  if (lines.empty()) throw ValidationError("label file is empty");
  const auto header = split_csv(lines.front());
  if (header.size() != 2 || header[0] != "id" || header[1] != "label") {
    throw ValidationError("label header must be id,label");
  }
  LabelRows rows;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv(lines[r]);
    if (fields.size() != 2) {
      throw ValidationError("label row " + std::to_string(r - 1) + ": expected 2 fields");
    }
    std::size_t label = 0;
    const auto& text = fields[1];
    const auto res = std::from_chars(text.data(), text.data() + text.size(), label);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
      throw ValidationError("label row " + std::to_string(r - 1) + ": '" + text +
                            "' is not a class index");
    }
    if (!seen.insert(fields[0]).second) {
      throw ValidationError("duplicate id '" + fields[0] + "' in labels");
    }
    rows.emplace_back(fields[0], label);
  }
  return rows;
}

LabelRows read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_labels(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_labels(std::ostream& out, const LabelRows& rows) {
  out << "id,label\n";
  for (const auto& [id, label] : rows) out << quote_csv(id) << ',' << label << '\n';
}

namespace {

std::string json_string(std::string_view text) { return json(std::string(text)).dump(); }

std::string optional_number(const std::optional<double>& value) {
  return value ? format_double(*value) : "null";
}

double number_field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ValidationError("log line " + std::to_string(line) + ": field '" + key +
                          "' missing or not a number");
  }
  return it->get<double>();
}

std::uint64_t unsigned_field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_unsigned()) {
    throw ValidationError("log line " + std::to_string(line) + ": field '" + key +
                          "' missing or not a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError("log line " + std::to_string(line) + ": field '" + key +
                          "' missing or not a string");
  }
  return it->get<std::string>();
}

}  // namespace

void write_log(std::ostream& out, const AcquisitionLog& log, const LossSpec& loss,
               const std::vector<std::string>& pool_ids) {
  if (pool_ids.size() != log.pool_size) throw ShapeError("one id per pool position is required");
  const auto& cfg = log.config;
  out << "{\"format\":\"active-eval-log\",\"version\":\"1\",\"seed\":" << cfg.seed
      << ",\"N\":" << log.pool_size << ",\"M\":" << cfg.budget
      << ",\"kind\":" << json_string(to_string(cfg.kind))
      << ",\"clip_alpha\":" << format_double(cfg.clip_alpha)
      << ",\"loss\":" << json_string(to_string(loss.kind))
      << ",\"probability_floor\":" << format_double(loss.probability_floor) << "}\n";

  const bool have_losses =
      std::all_of(log.records.begin(), log.records.end(), [](const auto& r) { return r.loss.has_value(); });
  std::vector<double> running;
  if (have_losses && !log.empty()) running = running_lure(log);

  for (std::size_t j = 0; j < log.size(); ++j) {
    const auto& rec = log.records[j];
    out << "{\"m\":" << rec.step << ",\"index\":" << rec.pool_index
        << ",\"id\":" << json_string(pool_ids.at(rec.pool_index))
        << ",\"q\":" << format_double(rec.q) << ",\"v\":" << format_double(rec.v)
        << ",\"loss\":" << optional_number(rec.loss) << ",\"score\":" << format_double(rec.score)
        << ",\"running_lure\":"
        << (running.empty() ? std::string("null") : format_double(running[j])) << "}\n";
  }
}

LogFile read_log(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      lines.emplace_back(number, std::move(line));
    }
  }
  if (lines.empty()) throw ValidationError("log file is empty");

  auto parse = [](const std::pair<std::size_t, std::string>& line) {
    try {
      json obj = json::parse(line.second);
      if (!obj.is_object()) throw ValidationError("not a JSON object");
      return obj;
    } catch (const json::exception& e) {
      throw ValidationError("log line " + std::to_string(line.first) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("log line " + std::to_string(line.first) + ": " + e.what());
    }
  };

  LogFile out;
  const json header = parse(lines.front());
  const std::size_t hl = lines.front().first;
  if (header.value("format", "") != "active-eval-log" || header.value("version", "") != "1") {
    throw ValidationError("log header must declare format active-eval-log version 1");
  }
  out.log.pool_size = unsigned_field(header, "N", hl);
  out.log.config.budget = unsigned_field(header, "M", hl);
  out.log.config.seed = unsigned_field(header, "seed", hl);
  out.log.config.clip_alpha = number_field(header, "clip_alpha", hl);
  try {
    out.log.config.kind = parse_acquisition_kind(string_field(header, "kind", hl));
    out.loss.kind = parse_loss_kind(string_field(header, "loss", hl));
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("log header: ") + e.what());
  }
  out.loss.probability_floor = number_field(header, "probability_floor", hl);

  std::unordered_set<std::size_t> seen;
  for (std::size_t j = 1; j < lines.size(); ++j) {
    const json obj = parse(lines[j]);
    const std::size_t ln = lines[j].first;
    AcquisitionRecord rec;
    rec.step = unsigned_field(obj, "m", ln);
    rec.pool_index = unsigned_field(obj, "index", ln);
    rec.q = number_field(obj, "q", ln);
    rec.v = number_field(obj, "v", ln);
    rec.score = number_field(obj, "score", ln);
    const auto loss_it = obj.find("loss");
    if (loss_it != obj.end() && !loss_it->is_null()) rec.loss = number_field(obj, "loss", ln);
    if (rec.step != j) {
      throw ValidationError("log line " + std::to_string(ln) + ": step " + std::to_string(rec.step) +
                            " out of order");
    }
    if (!(rec.q > 0.0 && rec.q <= 1.0)) {
      throw ValidationError("log line " + std::to_string(ln) + ": q outside (0, 1]");
    }
    if (rec.pool_index >= out.log.pool_size || !seen.insert(rec.pool_index).second) {
      throw ValidationError("log line " + std::to_string(ln) + ": index repeated or outside pool");
    }
    out.ids.push_back(string_field(obj, "id", ln));
    out.log.records.push_back(rec);
  }
  if (out.log.records.size() > out.log.config.budget || out.log.config.budget > out.log.pool_size) {
    throw ValidationError("log has more records than its budget, or a budget above N");
  }
  return out;
}

LogFile read_log(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_log(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string seed_comment(std::uint64_t seed) {
  return "# active-eval v1 seed=" + std::to_string(seed);
}

}  // namespace active_eval::io
