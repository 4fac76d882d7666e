#include "alphalogics/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "alphalogics/error.hpp"
#include "alphalogics/stats.hpp"

namespace alphalogics {

namespace {

constexpr std::int32_t days_from_civil(std::int32_t y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const std::int32_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

constexpr void civil_from_days(std::int32_t z, std::int32_t& y, unsigned& m, unsigned& d) noexcept {
    z += 719468;
    const std::int32_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<std::int32_t>(yoe) + era * 400 + (m <= 2);
}

bool is_leap(std::int32_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int32_t y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

template <typename Int>
bool parse_digits(std::string_view s, Int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Splits one CSV line. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::string(trim(cur)));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::string(trim(cur)));
    return out;
}

bool parse_number(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

} // namespace

Date Date::parse(std::string_view iso) {
    Date d;
    if (!try_parse(iso, d)) throw DataError("unparseable date '" + std::string(iso) + "'");
    return d;
}

bool Date::try_parse(std::string_view iso, Date& out) noexcept {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return false;
    std::int32_t y = 0;
    unsigned m = 0, d = 0;
    if (!parse_digits(iso.substr(0, 4), y) || !parse_digits(iso.substr(5, 2), m) ||
        !parse_digits(iso.substr(8, 2), d))
        return false;
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return false;
    out = Date(days_from_civil(y, m, d));
    return true;
}

std::string Date::to_string() const {
    std::int32_t y;
    unsigned m, d;
    civil_from_days(days_, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(y), m, d);
    return buf;
}

std::string_view field_name(Field f) {
    switch (f) {
    case Field::Open: return "open";
    case Field::High: return "high";
    case Field::Low: return "low";
    case Field::Close: return "close";
    case Field::Volume: return "volume";
    }
    return "?";
}

Panel Panel::make(std::vector<Date> dates, std::vector<std::string> instruments, Matrix open,
                  Matrix high, Matrix low, Matrix close, Matrix volume) {
    for (std::size_t i = 1; i < dates.size(); ++i)
        if (!(dates[i - 1] < dates[i]))
            throw DataError("dates must be strictly increasing (at " + dates[i].to_string() + ")");
    {
        std::set<std::string> seen(instruments.begin(), instruments.end());
        if (seen.size() != instruments.size()) throw DataError("duplicate instrument identifier");
    }
    for (const Matrix* m : {&open, &high, &low, &close, &volume})
        if (m->rows() != dates.size() || m->cols() != instruments.size())
            throw DataError("series shape does not match dates x instruments");
    for (double v : volume.data())
        if (!is_missing(v) && v < 0) throw DataError("negative volume");
    for (std::size_t c = 0; c < instruments.size(); ++c) {
        bool any = false;
        for (std::size_t r = 0; r < dates.size() && !any; ++r) any = !is_missing(close(r, c));
        if (!any) throw DataError("instrument '" + instruments[c] + "' has no close values");
    }
    Panel p;
    p.dates_ = std::move(dates);
    p.instruments_ = std::move(instruments);
    p.open_ = std::move(open);
    p.high_ = std::move(high);
    p.low_ = std::move(low);
    p.close_ = std::move(close);
    p.volume_ = std::move(volume);
    return p;
}

const Matrix& Panel::series(Field f) const {
    switch (f) {
    case Field::Open: return open_;
    case Field::High: return high_;
    case Field::Low: return low_;
    case Field::Close: return close_;
    case Field::Volume: return volume_;
    }
    return close_;
}

std::size_t Panel::lower_bound(Date d) const {
    return static_cast<std::size_t>(std::lower_bound(dates_.begin(), dates_.end(), d) -
                                    dates_.begin());
}

Panel Panel::slice_dates(std::size_t first, std::size_t last) const {
    Panel p;
    p.dates_.assign(dates_.begin() + static_cast<std::ptrdiff_t>(first),
                    dates_.begin() + static_cast<std::ptrdiff_t>(last));
    p.instruments_ = instruments_;
    p.open_ = open_.slice_rows(first, last);
    p.high_ = high_.slice_rows(first, last);
    p.low_ = low_.slice_rows(first, last);
    p.close_ = close_.slice_rows(first, last);
    p.volume_ = volume_.slice_rows(first, last);
    return p;
}

Panel Panel::select_instruments(const std::vector<std::size_t>& columns) const {
    const std::size_t n = dates_.size();
    auto pick = [&](const Matrix& src) {
        Matrix out(n, columns.size());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < columns.size(); ++j) out(r, j) = src(r, columns[j]);
        return out;
    };
    Panel p;
    p.dates_ = dates_;
    for (std::size_t c : columns) p.instruments_.push_back(instruments_[c]);
    p.open_ = pick(open_);
    p.high_ = pick(high_);
    p.low_ = pick(low_);
    p.close_ = pick(close_);
    p.volume_ = pick(volume_);
    return p;
}

Panel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ingest_csv_text(ss.str(), schema);
}

Panel ingest_csv_text(std::string_view text, const CsvSchema& schema) {
    struct Row {
        Date date;
        std::string symbol;
        double v[5];
        std::size_t line;
    };

    std::vector<Row> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    int col_date = -1, col_sym = -1;
    int col_field[5] = {-1, -1, -1, -1, -1};
    std::size_t needed = 0;
    bool have_header = false;

    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF")
            line.remove_prefix(3);
        if (trim(line).empty()) {
            if (nl == text.size()) break;
            continue;
        }
        auto cells = split_csv_line(line);
        if (!have_header) {
            auto find = [&](const std::string& name) -> int {
                for (std::size_t i = 0; i < cells.size(); ++i)
                    if (cells[i] == name) return static_cast<int>(i);
                throw DataError("missing required column '" + name + "'", line_no);
            };
            col_date = find(schema.date);
            col_sym = find(schema.instrument);
            const std::string* names[5] = {&schema.open, &schema.high, &schema.low, &schema.close,
                                           &schema.volume};
            for (int f = 0; f < 5; ++f) col_field[f] = find(*names[f]);
            needed = static_cast<std::size_t>(
                std::max({col_date, col_sym, col_field[0], col_field[1], col_field[2],
                          col_field[3], col_field[4]}) + 1);
            have_header = true;
            continue;
        }
        if (cells.size() < needed)
            throw DataError("malformed row: expected at least " + std::to_string(needed) +
                                " fields, found " + std::to_string(cells.size()),
                            line_no);
        Row r;
        r.line = line_no;
        const std::string& ds = cells[static_cast<std::size_t>(col_date)];
        if (!Date::try_parse(ds, r.date))
            throw DataError("unparseable date '" + ds + "'", line_no);
        r.symbol = cells[static_cast<std::size_t>(col_sym)];
        if (r.symbol.empty()) throw DataError("malformed row: empty symbol", line_no);
        for (int f = 0; f < 5; ++f) {
            const std::string& cell = cells[static_cast<std::size_t>(col_field[f])];
            if (cell.empty()) {
                r.v[f] = kMissing;
            } else if (!parse_number(cell, r.v[f])) {
                throw DataError("malformed row: bad number '" + cell + "' in column '" +
                                    std::string(field_name(kAllFields[f])) + "'",
                                line_no);
            }
        }
        if (!is_missing(r.v[4]) && r.v[4] < 0)
            throw DataError("malformed row: negative volume", line_no);
        rows.push_back(std::move(r));
        if (nl == text.size()) break;
    }
    if (!have_header) throw DataError("empty CSV: no header row");

    std::set<Date> date_set;
    std::set<std::string> sym_set;
    for (const Row& r : rows) {
        date_set.insert(r.date);
        sym_set.insert(r.symbol);
    }
    std::vector<Date> dates(date_set.begin(), date_set.end());
    std::vector<std::string> syms(sym_set.begin(), sym_set.end());
    std::unordered_map<std::string, std::size_t> sym_index;
    for (std::size_t i = 0; i < syms.size(); ++i) sym_index.emplace(syms[i], i);

    Matrix m[5];
    for (auto& x : m) x = Matrix(dates.size(), syms.size());
    std::vector<char> seen(dates.size() * syms.size(), 0);
    for (const Row& r : rows) {
        const auto di = static_cast<std::size_t>(
            std::lower_bound(dates.begin(), dates.end(), r.date) - dates.begin());
        const std::size_t si = sym_index.at(r.symbol);
        char& s = seen[di * syms.size() + si];
        if (s)
            throw DataError("duplicate row for (" + r.date.to_string() + ", " + r.symbol + ")",
                            r.line);
        s = 1;
        for (int f = 0; f < 5; ++f) m[f](di, si) = r.v[f];
    }

    // Instruments without a single close cannot be part of a panel.
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < syms.size(); ++c)
        for (std::size_t r = 0; r < dates.size(); ++r)
            if (!is_missing(m[3](r, c))) {
                keep.push_back(c);
                break;
            }
    if (keep.size() != syms.size()) {
        std::vector<std::string> kept_syms;
        for (std::size_t c : keep) kept_syms.push_back(syms[c]);
        for (auto& x : m) {
            Matrix sub(dates.size(), keep.size());
            for (std::size_t r = 0; r < dates.size(); ++r)
                for (std::size_t j = 0; j < keep.size(); ++j) sub(r, j) = x(r, keep[j]);
            x = std::move(sub);
        }
        syms = std::move(kept_syms);
    }
    return Panel::make(std::move(dates), std::move(syms), std::move(m[0]), std::move(m[1]),
                       std::move(m[2]), std::move(m[3]), std::move(m[4]));
}

std::string to_csv_text(const Panel& p) {
    std::string out = "date,symbol,open,high,low,close,volume\n";
    for (std::size_t r = 0; r < p.num_dates(); ++r) {
        const std::string ds = p.dates()[r].to_string();
        for (std::size_t c = 0; c < p.num_instruments(); ++c) {
            out += ds;
            out += ',';
            out += p.instruments()[c];
            for (Field f : kAllFields) {
                out += ',';
                const double v = p.series(f)(r, c);
                if (!is_missing(v)) out += format_number(v);
            }
            out += '\n';
        }
    }
    return out;
}

void write_csv(const Panel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_csv_text(panel);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Panel filter_universe(const Panel& panel, std::size_t min_days) {
    if (min_days < 1) throw PreconditionError("min_days must be >= 1");
    std::vector<std::size_t> keep;
    const Matrix& close = panel.close();
    for (std::size_t c = 0; c < panel.num_instruments(); ++c) {
        std::size_t count = 0;
        for (std::size_t r = 0; r < panel.num_dates(); ++r) count += !is_missing(close(r, c));
        if (count >= min_days) keep.push_back(c);
    }
    if (keep.empty())
        throw EmptyUniverseError("no instrument has at least " + std::to_string(min_days) +
                                 " trading days");
    if (keep.size() == panel.num_instruments()) return panel;
    return panel.select_instruments(keep);
}

ReturnPanel forward_returns(const Panel& panel, std::size_t horizon) {
    if (horizon < 1) throw PreconditionError("horizon must be >= 1");
    const Matrix& close = panel.close();
    ReturnPanel out{horizon, Matrix(panel.num_dates(), panel.num_instruments())};
    for (std::size_t r = 0; r + horizon < panel.num_dates(); ++r)
        for (std::size_t c = 0; c < panel.num_instruments(); ++c) {
            const double a = close(r, c), b = close(r + horizon, c);
            if (!is_missing(a) && !is_missing(b)) out.values(r, c) = finite_or_missing(b / a - 1.0);
        }
    return out;
}

Matrix cross_sectional_zscore(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    std::vector<double> buf;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        buf.clear();
        for (double v : row)
            if (!is_missing(v)) buf.push_back(v);
        const auto mv = stats::mean_pvar(buf);
        const bool degenerate = buf.size() < 2 || !(mv.var > 0);
        const double sd = std::sqrt(mv.var);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (is_missing(row[c])) continue;
            dst[c] = degenerate ? 0.0 : finite_or_missing((row[c] - mv.mean) / sd);
        }
    }
    return out;
}

void SplitSpec::validate(const std::vector<Date>& dates) const {
    const DateInterval* parts[] = {&train, &validation, &test};
    const char* names[] = {"train", "validation", "test"};
    for (int i = 0; i < 3; ++i) {
        if (parts[i]->last < parts[i]->first)
            throw PreconditionError(std::string(names[i]) + " interval is reversed");
        const bool any = std::any_of(dates.begin(), dates.end(),
                                     [&](Date d) { return parts[i]->contains(d); });
        if (!any)
            throw PreconditionError(std::string(names[i]) +
                                    " interval contains no panel dates");
    }
    if (!(train.last < validation.first) || !(validation.last < test.first))
        throw PreconditionError("split intervals must be disjoint and ordered train < "
                                "validation < test");
}

SplitIndexes resolve_splits(const SplitSpec& spec, const std::vector<Date>& dates) {
    spec.validate(dates);
    auto range = [&](const DateInterval& iv) {
        IndexRange r;
        r.begin = static_cast<std::size_t>(
            std::lower_bound(dates.begin(), dates.end(), iv.first) - dates.begin());
        r.end = static_cast<std::size_t>(
            std::upper_bound(dates.begin(), dates.end(), iv.last) - dates.begin());
        return r;
    };
    return {range(spec.train), range(spec.validation), range(spec.test)};
}

} // namespace alphalogics
