#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace pdl::harness {

using Row = std::vector<std::string>;

// Shortest round-trip-stable text for doubles (%.10g), plain integers.
std::string fmt(double x);
std::string fmt(bool b);
template <class T>
    requires(std::is_integral_v<T> && !std::is_same_v<T, bool>)
std::string fmt(T x) {
    return std::to_string(x);
}
std::string hex64(std::uint64_t x);

// Minimal RFC 4180 writer; fields with commas, quotes or newlines are quoted.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const Row& header);
    void write(const Row& row);
    void flush() { out_.flush(); }
    std::uint64_t rows() const { return rows_; }
    std::size_t columns() const { return columns_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::uint64_t rows_ = 0;
};

std::string csv_escape(const std::string& field);
// Splits one CSV line (no embedded newlines).
Row csv_split(const std::string& line);

} // namespace pdl::harness
