#include "hydroinv/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hydroinv/parameters.hpp"

namespace hydroinv::io {

std::string format_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view field) {
    field = trim(field);
    if (field.empty()) throw InputError("empty numeric field");
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw InputError("not a number: '" + std::string(field) + "'");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << '\n';
    }
    std::string line;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) line.push_back(',');
            line += format_double(m(r, c));
        }
        line.push_back('\n');
        out << line;
    }
}

void write_matrix_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    write_matrix(out, m, header);
}

Matrix read_matrix(std::istream& in, bool has_header, std::vector<std::string>* header) {
    std::string line;
    std::size_t line_no = 0;
    if (has_header) {
        if (!std::getline(in, line)) throw InputError("missing header line");
        ++line_no;
        if (header) {
            header->clear();
            for (auto f : split(trim(line))) header->emplace_back(trim(f));
        }
    }
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line));
        if (rows == 0) cols = fields.size();
        if (fields.size() != cols) {
            throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                             " fields, found " + std::to_string(fields.size()));
        }
        for (auto f : fields) {
            try {
                values.push_back(parse_double(f));
            } catch (const InputError& e) {
                throw InputError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        ++rows;
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

Matrix read_matrix_file(const std::string& path, bool has_header, std::vector<std::string>* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    return read_matrix(in, has_header, header);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string file_digest(const std::string& path) { return digest(read_text_file(path)); }

void write_f64_le(std::ostream& out, const std::vector<double>& values) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_f64_le(std::istream& in, std::size_t count) {
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
        throw InputError("weight file truncated");
    }
    return values;
}

}  // namespace hydroinv::io
