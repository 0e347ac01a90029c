#pragma once

// Field snapshots, CSV tables and JSON-lines failure records.
//
// Snapshot format: <stem>.bin holds the values as little-endian float64 in the
// grid's row-major order; <stem>.hdr is a text sidecar of `key = value` lines
// (field, time, dims, lengths, dtype, order).

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "evarfluid/grid.hpp"

namespace evf::io {

void write_snapshot(const std::filesystem::path& stem, const std::string& field_name,
                    const ScalarField& f, double time);

struct Snapshot {
  std::string field_name;
  double time = 0.0;
  ScalarField field;
};

Snapshot read_snapshot(const std::filesystem::path& stem);

/// "%.17g": enough digits to round-trip, and byte-reproducible.
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

/// Small grids only: one line per point, x,y,z,value.
void write_field_csv(const std::filesystem::path& path, const ScalarField& f);

}  // namespace evf::io
