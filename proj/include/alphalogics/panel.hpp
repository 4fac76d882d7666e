#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "alphalogics/matrix.hpp"

namespace alphalogics {

/// Trading date stored as days since 1970-01-01. Parsed from and printed as
/// ISO-8601 `YYYY-MM-DD`; no calendar logic beyond that.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days) : days_(days) {}

    static Date parse(std::string_view iso);  // throws DataError
    static bool try_parse(std::string_view iso, Date& out) noexcept;
    std::string to_string() const;

    constexpr std::int32_t days() const noexcept { return days_; }
    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

enum class Field { Open, High, Low, Close, Volume };

inline constexpr Field kAllFields[] = {Field::Open, Field::High, Field::Low, Field::Close,
                                       Field::Volume};

std::string_view field_name(Field f);

/// Aligned OHLCV panel. Immutable once built by `Panel::make` or ingestion.
class Panel {
public:
    Panel() = default;

    /// Validates the invariants: strictly increasing dates, matching shapes,
    /// non-negative volume, and at least one close per instrument.
    static Panel make(std::vector<Date> dates, std::vector<std::string> instruments, Matrix open,
                      Matrix high, Matrix low, Matrix close, Matrix volume);

    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& instruments() const noexcept { return instruments_; }
    std::size_t num_dates() const noexcept { return dates_.size(); }
    std::size_t num_instruments() const noexcept { return instruments_.size(); }
    bool empty() const noexcept { return dates_.empty() || instruments_.empty(); }

    const Matrix& series(Field f) const;
    const Matrix& open() const noexcept { return open_; }
    const Matrix& high() const noexcept { return high_; }
    const Matrix& low() const noexcept { return low_; }
    const Matrix& close() const noexcept { return close_; }
    const Matrix& volume() const noexcept { return volume_; }

    /// Index of the first date >= d (num_dates() if none).
    std::size_t lower_bound(Date d) const;

    /// Panel restricted to dates [first, last).
    Panel slice_dates(std::size_t first, std::size_t last) const;
    /// Panel restricted to the given instrument columns (in the given order).
    Panel select_instruments(const std::vector<std::size_t>& columns) const;

    friend bool operator==(const Panel&, const Panel&) = default;

private:
    std::vector<Date> dates_;
    std::vector<std::string> instruments_;
    Matrix open_, high_, low_, close_, volume_;
};

/// Column names used to locate each field in a CSV header.
struct CsvSchema {
    std::string date = "date";
    std::string instrument = "symbol";
    std::string open = "open";
    std::string high = "high";
    std::string low = "low";
    std::string close = "close";
    std::string volume = "volume";
};

Panel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Panel ingest_csv_text(std::string_view text, const CsvSchema& schema = {});

/// Writes the full (date, instrument) grid; missing cells are empty fields.
void write_csv(const Panel& panel, const std::filesystem::path& path);
std::string to_csv_text(const Panel& panel);

/// Keeps instruments with at least `min_days` non-missing closes.
Panel filter_universe(const Panel& panel, std::size_t min_days);

struct ReturnPanel {
    std::size_t horizon = 1;
    Matrix values;
};

/// value(t, i) = close(t + horizon, i) / close(t, i) - 1.
ReturnPanel forward_returns(const Panel& panel, std::size_t horizon);

/// Per date: (x - mean) / population std over non-missing entries. Dates with
/// fewer than two entries or zero variance map every present entry to 0.
Matrix cross_sectional_zscore(const Matrix& m);

struct DateInterval {
    Date first;
    Date last;  // inclusive
    bool contains(Date d) const noexcept { return first <= d && d <= last; }
};

/// Half-open range of date indexes into a panel.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return begin >= end; }
    bool contains(std::size_t i) const noexcept { return begin <= i && i < end; }
};

struct SplitSpec {
    DateInterval train;
    DateInterval validation;
    DateInterval test;

    /// Throws PreconditionError unless intervals are ordered, disjoint and
    /// each contains at least one panel date.
    void validate(const std::vector<Date>& dates) const;
};

struct SplitIndexes {
    IndexRange train;
    IndexRange validation;
    IndexRange test;
};

SplitIndexes resolve_splits(const SplitSpec& spec, const std::vector<Date>& dates);

} // namespace alphalogics
