#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace tann {

// Shortest round-trip decimal form of a double (printf %.17g then trimmed by
// re-parsing): equal values always print identically, so deterministic runs
// produce byte-identical CSV files.
std::string fmt_double(double v);

std::string read_file(const std::string& path);          // binary-safe
std::vector<std::uint8_t> read_bytes(const std::string& path);

// Write to <path>.tmp then rename, so partial artifacts never appear.
void write_file_atomic(const std::string& path, const std::string& content);

void ensure_parent_dir(const std::string& path);
void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t file_checksum(const std::string& path);

// Minimal row builder for the CSV artifacts.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);
  CsvBuilder& cell(const std::string& v);
  CsvBuilder& cell(double v);
  CsvBuilder& cell(long long v);
  CsvBuilder& cell(int v) { return cell((long long)v); }
  void end_row();
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::string row_;
};

}  // namespace tann
