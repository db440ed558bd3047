#include "cpsw/ingest.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cpsw {

namespace {

std::string format_timestamp(std::int64_t epoch_s) {
  std::time_t t = static_cast<std::time_t>(epoch_s);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

std::int64_t parse_timestamp(const std::string& s, int row) {
  std::tm tm{};
  int y, mo, d, h, mi, se;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &se) != 6)
    throw std::runtime_error("row " + std::to_string(row) +
                             ": unparsable timestamp: " + s);
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = se;
  return static_cast<std::int64_t>(timegm(&tm));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TimeSeries read_historian_csv(const std::string& path,
                              const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open historian file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("historian file is empty: " + path);
  auto header = split_csv(line);
  if (header.empty() || header[0] != "Timestamp")
    throw std::runtime_error("header: first column must be Timestamp");
  const size_t nf = static_cast<size_t>(schema.size());
  bool has_status = header.size() == nf + 2 && header.back() == "Status";
  if (header.size() != nf + 1 && !has_status)
    throw std::runtime_error("header: expected " + std::to_string(nf) +
                             " feature columns (plus optional Status)");
  for (size_t j = 0; j < nf; ++j)
    if (header[j + 1] != schema.at(static_cast<int>(j)).name)
      throw std::runtime_error("header: column " + std::to_string(j + 1) +
                               " is '" + header[j + 1] + "', schema expects '" +
                               schema.at(static_cast<int>(j)).name + "'");

  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  std::int64_t start_time = 0;
  std::int64_t prev_time = 0;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(row) +
                               ": wrong number of columns");
    std::int64_t ts = parse_timestamp(cells[0], row);
    if (rows.empty())
      start_time = ts;
    else if (ts <= prev_time)
      throw std::runtime_error("row " + std::to_string(row) +
                               ": non-monotone timestamp");
    prev_time = ts;

    std::vector<double> vals(nf);
    for (size_t j = 0; j < nf; ++j) {
      const std::string& cell = cells[j + 1];
      try {
        size_t pos = 0;
        vals[j] = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("row " + std::to_string(row) +
                                 ": unparsable value '" + cell + "' in column " +
                                 header[j + 1]);
      }
    }
    rows.push_back(std::move(vals));
    if (has_status) {
      const std::string& st = cells.back();
      if (st == "Normal")
        labels.push_back(Label::Normal);
      else if (st == "Attack")
        labels.push_back(Label::Attack);
      else
        throw std::runtime_error("row " + std::to_string(row) +
                                 ": Status must be Normal or Attack, got '" +
                                 st + "'");
    }
  }

  TimeSeries out;
  out.start_time = start_time;
  out.period = 1.0;
  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(nf));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < nf; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  out.labels = std::move(labels);
  return out;
}

void write_historian_csv(const TimeSeries& series, const FeatureSchema& schema,
                         const std::string& path, bool include_status) {
  if (series.values.cols() != schema.size())
    throw std::runtime_error("write_historian_csv: schema mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write historian file: " + path);

  const bool status = include_status && series.has_labels();
  out << "Timestamp";
  for (int j = 0; j < schema.size(); ++j) out << ',' << schema.at(j).name;
  if (status) out << ",Status";
  out << '\n';

  char buf[64];
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    out << format_timestamp(series.start_time +
                            static_cast<std::int64_t>(t * series.period));
    for (int j = 0; j < schema.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.6f", series.values(t, j));
      out << ',' << buf;
    }
    if (status)
      out << ',' << (series.labels[static_cast<size_t>(t)] == Label::Attack
                         ? "Attack"
                         : "Normal");
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cpsw
