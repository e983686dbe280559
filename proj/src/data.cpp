#include "stratus/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "stratus/error.hpp"

namespace stratus::data {

namespace {

bool is_missing_token(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<Record> split_records(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    bool record_has_content = false;
    std::size_t line = 1;
    current.line = 1;

    auto finish_field = [&] {
        if (field_quoted) {
            current.fields.push_back(field);
        } else {
            current.fields.emplace_back(trim(field));
        }
        field.clear();
        field_quoted = false;
    };
    auto finish_record = [&] {
        finish_field();
        if (record_has_content) {
            records.push_back(std::move(current));
        }
        current = Record{};
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!trim(field).empty()) {
                    throw Error(ErrorCode::ParseError,
                                fmt::format("line {}: unexpected quote inside an unquoted field", line));
                }
                field.clear();
                in_quotes = true;
                field_quoted = true;
                record_has_content = true;
                break;
            case ',':
                finish_field();
                record_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                finish_record();
                ++line;
                current.line = line;
                break;
            default:
                if (field_quoted) {
                    if (c != ' ' && c != '\t') {
                        throw Error(ErrorCode::ParseError,
                                    fmt::format("line {}: text after closing quote", line));
                    }
                    break;
                }
                field.push_back(c);
                if (c != ' ' && c != '\t') record_has_content = true;
                break;
        }
    }
    if (in_quotes) {
        throw Error(ErrorCode::ParseError, fmt::format("line {}: unterminated quoted field", line));
    }
    finish_record();
    return records;
}

bool needs_quoting(std::string_view cell) {
    if (cell.empty()) return true;
    if (cell.front() == ' ' || cell.back() == ' ' || cell.front() == '\t' || cell.back() == '\t') return true;
    return cell.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_cell(std::string& out, std::string_view cell) {
    if (!needs_quoting(cell)) {
        out.append(cell);
        return;
    }
    out.push_back('"');
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    if (!columns_.empty()) {
        n_rows_ = columns_.front().cells.size();
    }
    for (auto& col : columns_) {
        if (col.cells.size() != n_rows_) {
            throw Error(ErrorCode::ParseError, fmt::format("column '{}' has {} cells, expected {}", col.name,
                                                           col.cells.size(), n_rows_));
        }
        if (!col.numeric) {
            std::vector<double> values;
            values.reserve(col.cells.size());
            bool all_numeric = !col.cells.empty();
            for (const auto& cell : col.cells) {
                const auto v = parse_decimal(cell);
                if (!v) {
                    all_numeric = false;
                    break;
                }
                values.push_back(*v);
            }
            if (all_numeric) col.numeric = std::move(values);
        }
    }
}

const Column* Dataset::find(std::string_view name) const noexcept {
    const auto it = std::find_if(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == name; });
    return it == columns_.end() ? nullptr : &*it;
}

const Column& Dataset::column(std::string_view name) const {
    if (const Column* c = find(name)) {
        return *c;
    }
    throw Error(ErrorCode::MissingColumn, fmt::format("column '{}' not found", name));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> out;
    out.reserve(columns_.size());
    for (const auto& col : columns_) {
        Column c;
        c.name = col.name;
        c.cells.reserve(rows.size());
        for (std::size_t r : rows) c.cells.push_back(col.cells.at(r));
        out.push_back(std::move(c));
    }
    return Dataset(std::move(out));
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.columns_.size() != b.columns_.size()) return false;
    for (std::size_t i = 0; i < a.columns_.size(); ++i) {
        if (a.columns_[i].name != b.columns_[i].name || a.columns_[i].cells != b.columns_[i].cells) return false;
    }
    return true;
}

std::optional<double> parse_decimal(std::string_view text) noexcept {
    std::string_view s = text;
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    if (s[0] == '+' || s[0] == '-') ++i;
    std::size_t int_digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
        ++i;
        ++int_digits;
    }
    std::size_t frac_digits = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            ++i;
            ++frac_digits;
        }
        if (frac_digits == 0) return std::nullopt;
    }
    if (i != s.size() || int_digits + frac_digits == 0) return std::nullopt;
    if (s[0] == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

Dataset load_table(std::string_view text) {
    const auto records = split_records(text);
    if (records.empty()) {
        throw Error(ErrorCode::EmptyTable, "table has no header row");
    }
    const Record& header = records.front();
    std::vector<Column> columns(header.fields.size());
    for (std::size_t c = 0; c < header.fields.size(); ++c) {
        if (header.fields[c].empty()) {
            throw Error(ErrorCode::ParseError, fmt::format("line {}: header column {} is empty", header.line, c + 1));
        }
        for (std::size_t prev = 0; prev < c; ++prev) {
            if (columns[prev].name == header.fields[c]) {
                throw Error(ErrorCode::ParseError,
                            fmt::format("line {}: duplicate column name '{}'", header.line, header.fields[c]));
            }
        }
        columns[c].name = header.fields[c];
    }
    if (records.size() == 1) {
        throw Error(ErrorCode::EmptyTable, "table has a header but no observations");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        const Record& rec = records[r];
        if (rec.fields.size() != columns.size()) {
            throw Error(ErrorCode::ParseError, fmt::format("line {}: expected {} fields, found {}", rec.line,
                                                           columns.size(), rec.fields.size()));
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (is_missing_token(rec.fields[c])) {
                throw Error(ErrorCode::MissingCell, fmt::format("line {}, column '{}': missing value '{}'", rec.line,
                                                                columns[c].name, rec.fields[c]));
            }
            columns[c].cells.push_back(rec.fields[c]);
        }
    }
    return Dataset(std::move(columns));
}

Dataset load_table(std::istream& in) {
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return load_table(text);
}

std::string to_csv(const Dataset& data) {
    std::string out;
    const auto& cols = data.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out.push_back(',');
        write_cell(out, cols[c].name);
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out.push_back(',');
            write_cell(out, cols[c].cells[r]);
        }
        out.push_back('\n');
    }
    return out;
}

std::vector<std::string> levels_in_order(const Column& column) {
    std::vector<std::string> levels;
    std::map<std::string_view, bool> seen;
    for (const auto& cell : column.cells) {
        if (seen.emplace(cell, true).second) levels.push_back(cell);
    }
    return levels;
}

std::string GroupPartition::key_label(std::size_t index) const {
    std::string label;
    for (std::size_t f = 0; f < group_factors.size(); ++f) {
        if (f) label += ',';
        label += group_factors[f] + "=" + keys.at(index).at(f);
    }
    return label.empty() ? std::string("all") : label;
}

GroupPartition partition(const Dataset& data, const std::vector<std::string>& group_factors) {
    GroupPartition out;
    out.group_factors = group_factors;
    std::vector<const Column*> cols;
    for (const auto& name : group_factors) cols.push_back(&data.column(name));

    std::map<std::vector<std::string>, std::size_t> index;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        std::vector<std::string> key;
        key.reserve(cols.size());
        for (const Column* c : cols) key.push_back(c->cells[r]);
        auto [it, inserted] = index.emplace(key, out.keys.size());
        if (inserted) {
            out.keys.push_back(std::move(key));
            out.rows.emplace_back();
        }
        out.rows[it->second].push_back(r);
    }
    for (const auto& rows : out.rows) out.subsets.push_back(data.select_rows(rows));
    return out;
}

}  // namespace stratus::data
