#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace ipk::metrics {

/// Append-only CSV sink with a fixed header. Numeric cells print with %.10g,
/// so equal doubles always serialize to equal bytes.
class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::string& path, const std::string& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  CsvWriter(CsvWriter&& other) noexcept;
  CsvWriter& operator=(CsvWriter&& other) noexcept;

  void open(const std::string& path, const std::string& header);
  void row(const std::vector<double>& values);
  void close();
  bool is_open() const { return f_ != nullptr; }

 private:
  std::FILE* f_ = nullptr;
};

std::string format_cell(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
  std::vector<double> column(const std::string& name) const;
};

Table read_csv(const std::string& path);
void write_csv(const std::string& path, const Table& t);

/// Exponential smoothing s_t = w * s_{t-1} + (1 - w) * x_t with s_0 = x_0.
std::vector<double> smooth(const std::vector<double>& x, double weight = 0.9);

}  // namespace ipk::metrics
