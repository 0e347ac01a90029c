#include "evarfluid/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>

#include "evarfluid/error.hpp"

namespace evf::io {

namespace {

std::uint64_t to_little_endian(std::uint64_t u) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((u >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return u;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_snapshot(const std::filesystem::path& stem, const std::string& field_name,
                    const ScalarField& f, double time) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error(errc::io_error, "cannot write " + with_ext(stem, ".bin").string());
  for (double x : f.data) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    u = to_little_endian(u);
    bin.write(reinterpret_cast<const char*>(&u), 8);
  }
  std::ofstream hdr(with_ext(stem, ".hdr"));
  if (!hdr) throw Error(errc::io_error, "cannot write " + with_ext(stem, ".hdr").string());
  const Grid& g = f.grid;
  hdr << "field = " << field_name << "\n"
      << "time = " << format_double(time) << "\n"
      << "dims = " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n"
      << "lengths = " << format_double(g.lengths[0]) << " " << format_double(g.lengths[1]) << " "
      << format_double(g.lengths[2]) << "\n"
      << "dtype = float64-le\n"
      << "order = row-major (x slowest, z fastest)\n";
}

Snapshot read_snapshot(const std::filesystem::path& stem) {
  std::ifstream hdr(with_ext(stem, ".hdr"));
  if (!hdr) throw Error(errc::io_error, "cannot read " + with_ext(stem, ".hdr").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  Snapshot s;
  s.field_name = kv["field"];
  s.time = std::stod(kv.at("time"));
  Grid g;
  std::istringstream(kv.at("dims")) >> g.dims[0] >> g.dims[1] >> g.dims[2];
  std::istringstream(kv.at("lengths")) >> g.lengths[0] >> g.lengths[1] >> g.lengths[2];
  g.validate();
  s.field = ScalarField(g);
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error(errc::io_error, "cannot read " + with_ext(stem, ".bin").string());
  for (double& x : s.field.data) {
    std::uint64_t u = 0;
    bin.read(reinterpret_cast<char*>(&u), 8);
    if (!bin) throw Error(errc::io_error, "truncated snapshot " + with_ext(stem, ".bin").string());
    u = to_little_endian(u);
    std::memcpy(&x, &u, 8);
  }
  return s;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path);
  if (!out_) throw Error(errc::io_error, "cannot write " + path.string());
  row(header);
  rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw Error(errc::invalid_argument, "CSV row has the wrong number of columns");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
  out_.flush();
  ++rows_;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
  CsvWriter w(path, {"x", "y", "z", "value"});
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 x = f.grid.coord(i);
    w.row({format_double(x[0]), format_double(x[1]), format_double(x[2]), format_double(f[i])});
  }
}

}  // namespace evf::io
