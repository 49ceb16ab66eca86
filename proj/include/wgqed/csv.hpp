#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace wgqed {

/// Shortest round-trip text for a double (17 significant digits).
std::string format_number(double v);

/// Minimal CSV writer with a fixed header. Numbers use format_number.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t fnv1a_file(const std::string& path);
std::string hex64(std::uint64_t v);

/// Simple numeric CSV table reader (header + rows).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

}  // namespace wgqed
