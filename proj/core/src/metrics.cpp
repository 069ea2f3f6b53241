#include "ipk/metrics.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ipk::metrics {

CsvWriter::CsvWriter(const std::string& path, const std::string& header) { open(path, header); }

CsvWriter::~CsvWriter() { close(); }

CsvWriter::CsvWriter(CsvWriter&& other) noexcept : f_(other.f_) { other.f_ = nullptr; }

CsvWriter& CsvWriter::operator=(CsvWriter&& other) noexcept {
  if (this != &other) {
    close();
    f_ = other.f_;
    other.f_ = nullptr;
  }
  return *this;
}

void CsvWriter::open(const std::string& path, const std::string& header) {
  close();
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw std::runtime_error("CsvWriter: cannot open " + path);
  std::fprintf(f_, "%s\n", header.c_str());
}

void CsvWriter::row(const std::vector<double>& values) {
  if (!f_) throw std::logic_error("CsvWriter::row on closed writer");
  for (std::size_t i = 0; i < values.size(); ++i)
    std::fprintf(f_, i ? ",%.10g" : "%.10g", values[i]);
  std::fputc('\n', f_);
}

void CsvWriter::close() {
  if (f_) {
    std::fclose(f_);
    f_ = nullptr;
  }
}

std::string format_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Table::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw std::invalid_argument("Table: no column named " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(idx)]);
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size())
      throw std::runtime_error("read_csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_cell(r[i]);
    out << "\n";
  }
}

std::vector<double> smooth(const std::vector<double>& x, double weight) {
  std::vector<double> s;
  s.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    s.push_back(i == 0 ? x[0] : weight * s[i - 1] + (1.0 - weight) * x[i]);
  return s;
}

}  // namespace ipk::metrics
