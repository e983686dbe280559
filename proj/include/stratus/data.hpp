#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stratus::data {

// A named column. Every cell keeps its original text so that serialization
// reproduces the input exactly; `numeric` is populated iff every cell parses
// as a finite decimal literal.
struct Column {
    std::string name;
    std::vector<std::string> cells;
    std::optional<std::vector<double>> numeric;

    [[nodiscard]] bool is_numeric() const noexcept { return numeric.has_value(); }
};

// Long-format observation table: one row per observation, no missing cells.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns);

    [[nodiscard]] std::size_t n_rows() const noexcept { return n_rows_; }
    [[nodiscard]] std::size_t n_cols() const noexcept { return columns_.size(); }
    [[nodiscard]] const std::vector<Column>& columns() const noexcept { return columns_; }

    [[nodiscard]] const Column* find(std::string_view name) const noexcept;
    // Throws Error(MissingColumn).
    [[nodiscard]] const Column& column(std::string_view name) const;

    [[nodiscard]] Dataset select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

// Parses comma-delimited UTF-8 text with a mandatory header row. Fields may be
// double-quoted. Empty cells and the tokens NA, NaN and "." are missing values.
// Errors: ParseError (with line/column), EmptyTable, MissingCell.
Dataset load_table(std::string_view text);
Dataset load_table(std::istream& in);

// Integer and plain decimal literals only: [+-]?(digits)(.digits)? or .digits
std::optional<double> parse_decimal(std::string_view text) noexcept;

std::string to_csv(const Dataset& data);

// Rows split by the observed combinations of `group_factors`, in order of
// first appearance. An empty factor list yields one subset holding every row.
struct GroupPartition {
    std::vector<std::string> group_factors;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<std::size_t>> rows;
    std::vector<Dataset> subsets;

    [[nodiscard]] std::size_t size() const noexcept { return subsets.size(); }
    [[nodiscard]] std::string key_label(std::size_t index) const;
};

GroupPartition partition(const Dataset& data, const std::vector<std::string>& group_factors);

// Level labels of a column in first-appearance order.
std::vector<std::string> levels_in_order(const Column& column);

// Bundled synthetic fixtures: crd, rcbd, factorial, split_plot, lmm, gxe.
const std::vector<std::string>& builtin_names();
Dataset builtin_dataset(std::string_view name);
std::string_view builtin_csv(std::string_view name);

}  // namespace stratus::data
