#include "sharplab/records.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sharplab/error.hpp"

namespace sharplab {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_text(const std::string& s, const char* column) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw ParameterError(std::string("write_runs: column ") + column + " contains a delimiter: " + s);
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

double numeric_field(const RunRecord& r, std::string_view c) {
  if (c == "depth") return static_cast<double>(r.depth);
  if (c == "param_target") return r.param_target;
  if (c == "units") return static_cast<double>(r.units);
  if (c == "realized_params") return static_cast<double>(r.realized_params);
  if (c == "raw_norm") return r.raw_norm;
  if (c == "normalized_norm") return r.normalized_norm;
  if (c == "sharpness") return r.sharpness;
  if (c == "test_acc") return r.test_acc;
  if (c == "test_loss") return r.test_loss;
  if (c == "train_acc") return r.train_acc;
  if (c == "train_loss") return r.train_loss;
  if (c == "wall_time_s") return r.wall_time_s;
  throw ParameterError("'" + std::string(c) + "' is not a numeric run column");
}

void write_runs(std::ostream& out, const std::vector<RunRecord>& records) {
  for (std::size_t i = 0; i < kRunColumns.size(); ++i) out << (i ? "," : "") << kRunColumns[i];
  out << '\n';
  for (const auto& r : records) {
    check_text(r.family, "family");
    check_text(r.sharpness_basis, "sharpness_basis");
    check_text(r.status, "status");
    out << r.family << ',' << r.depth << ',' << format_double(r.param_target) << ',' << r.units << ','
        << r.realized_params << ',' << r.seed_init << ',' << r.seed_shuffle << ','
        << format_double(r.raw_norm) << ',' << format_double(r.normalized_norm) << ','
        << format_double(r.sharpness) << ',' << r.sharpness_basis << ',' << format_double(r.test_acc)
        << ',' << format_double(r.test_loss) << ',' << format_double(r.train_acc) << ','
        << format_double(r.train_loss) << ',' << r.status << ',' << format_double(r.wall_time_s)
        << '\n';
  }
}

void write_runs(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_runs(out, records);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<RunRecord> read_runs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty runs file: missing header", 1, 0);
  const auto header = split_line(strip_cr(line));
  std::map<std::string, std::size_t, std::less<>> where;
  for (std::size_t i = 0; i < header.size(); ++i) where[header[i]] = i;
  std::array<std::size_t, kRunColumns.size()> pos{};
  for (std::size_t c = 0; c < kRunColumns.size(); ++c) {
    const auto it = where.find(kRunColumns[c]);
    if (it == where.end()) {
      throw ParseError("missing column '" + std::string(kRunColumns[c]) + "'", 1, 0);
    }
    pos[c] = it->second;
  }

  std::vector<RunRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header.size()),
                       row, 0);
    }
    auto cell = [&](std::size_t c) -> const std::string& { return cells[pos[c]]; };
    auto fail = [&](std::size_t c, const char* what) {
      return ParseError("row " + std::to_string(row) + ", column " + std::to_string(pos[c] + 1) +
                            " (" + std::string(kRunColumns[c]) + "): " + what + " '" + cell(c) + "'",
                        row, pos[c] + 1);
    };
    auto real = [&](std::size_t c) {
      const std::string& s = cell(c);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw fail(c, "not a number");
      return v;
    };
    auto integer = [&](std::size_t c) {
      const std::string& s = cell(c);
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw fail(c, "not an unsigned integer");
      return v;
    };

    RunRecord r;
    r.family = cell(0);
    r.depth = integer(1);
    r.param_target = real(2);
    r.units = integer(3);
    r.realized_params = integer(4);
    r.seed_init = integer(5);
    r.seed_shuffle = integer(6);
    r.raw_norm = real(7);
    r.normalized_norm = real(8);
    r.sharpness = real(9);
    r.sharpness_basis = cell(10);
    r.test_acc = real(11);
    r.test_loss = real(12);
    r.train_acc = real(13);
    r.train_loss = real(14);
    r.status = cell(15);
    r.wall_time_s = real(16);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RunRecord> read_runs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_runs(in);
}

}  // namespace sharplab
