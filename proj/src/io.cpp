#include "stratwave/io.hpp"

#include "stratwave/errors.hpp"

#include <cfloat>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

namespace stratwave {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    double value = 0.0;
    auto res = std::from_chars(first, last, value);
    const char* tail = res.ptr;
    while (tail != last && (*tail == ' ' || *tail == '\t' || *tail == '\r')) ++tail;
    if (res.ec != std::errc() || tail != last || first == last) {
        throw IoError("malformed number in " + context + ": '" + text + "'");
    }
    return value;
}

long parse_long(const std::string& text, const std::string& context) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    long value = 0;
    auto res = std::from_chars(first, last, value);
    const char* tail = res.ptr;
    while (tail != last && (*tail == ' ' || *tail == '\t' || *tail == '\r')) ++tail;
    if (res.ec != std::errc() || tail != last || first == last) {
        throw IoError("malformed integer in " + context + ": '" + text + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    for (auto& f : fields) {
        size_t b = f.find_first_not_of(" \t");
        size_t e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("rename failed for: " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace stratwave
