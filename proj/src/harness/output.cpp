#include "pdl/harness/output.hpp"

#include <cmath>
#include <cstdio>

#include "pdl/kernel/errors.hpp"

namespace pdl::harness {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt(bool b) { return b ? "1" : "0"; }

std::string hex64(std::uint64_t x) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

Row csv_split(const std::string& line) {
    Row out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

CsvWriter::CsvWriter(const std::string& path, const Row& header) : path_(path), columns_(header.size()) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open '" + path + "' for writing");
    // Header is not counted as a row.
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << csv_escape(header[i]);
    out_ << '\n';
}

void CsvWriter::write(const Row& row) {
    if (row.size() != columns_)
        throw Error("csv '" + path_ + "': row has " + std::to_string(row.size()) + " fields, header has " +
                    std::to_string(columns_));
    for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << csv_escape(row[i]);
    out_ << '\n';
    ++rows_;
}

} // namespace pdl::harness
