#include "gexp/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "gexp/error.hpp"

namespace gexp {

namespace {

struct Field {
    std::string text;
    std::size_t column;
};

std::vector<Field> split(const std::string& line) {
    std::vector<Field> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::size_t end = comma == std::string::npos ? line.size() : comma;
        std::size_t a = start;
        std::size_t b = end;
        while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
        while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t' || line[b - 1] == '\r')) --b;
        out.push_back({line.substr(a, b - a), a + 1});
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError("missing column '" + name + "'", 1, 1);
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (blank(line)) continue;
        const auto fields = split(line);
        if (!have_header) {
            for (const auto& f : fields) {
                if (f.text.empty()) throw ParseError("empty header name", line_no, f.column);
                table.header.push_back(f.text);
            }
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no, fields.back().column);
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            double value = 0.0;
            const char* first = f.text.data();
            const char* last = first + f.text.size();
            if (!f.text.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (f.text.empty() || ec != std::errc() || ptr != last) {
                throw ParseError("'" + f.text + "' is not a number", line_no,
                                 f.column + static_cast<std::size_t>(ptr - f.text.data()));
            }
            row.push_back(value);
        }
        table.rows.push_back(std::move(row));
        table.lines.push_back(line_no);
    }
    if (!have_header) throw ParseError("missing header row", line_no + 1, 1);
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
    return read_csv(in);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, ptr};
}

}  // namespace gexp
