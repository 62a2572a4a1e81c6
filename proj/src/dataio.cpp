#include "imv/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "imv/errors.hpp"

namespace imv {

namespace {

// RFC-4180 field splitter; quoted fields may contain commas, quotes ("") and
// line breaks. Returns one vector of fields per record.
std::vector<std::vector<std::string>> split_csv(const std::string& text,
                                                const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                any = true;
                break;
            case ',':
                fields.push_back(std::move(cur));
                cur.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !cur.empty()) {
                    fields.push_back(std::move(cur));
                    cur.clear();
                    records.push_back(std::move(fields));
                    fields.clear();
                    any = false;
                }
                break;
            default:
                cur += c;
                any = true;
                break;
        }
    }
    if (in_quotes) throw ParseError(origin + ": unterminated quoted field");
    if (any || !cur.empty()) {
        fields.push_back(std::move(cur));
        records.push_back(std::move(fields));
    }
    return records;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) return true;
    return s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null";
}

bool parse_number(const std::string& raw, double& out) {
    std::string s = trim(raw);
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

}  // namespace

SeriesTable parse_csv(const std::string& text, const std::string& target_column,
                      const std::string& origin) {
    auto records = split_csv(text, origin);
    if (records.empty()) throw ParseError(origin + ": empty file, header required");
    const std::vector<std::string>& header = records[0];
    const std::size_t width = header.size();

    for (std::size_t r = 1; r < records.size(); ++r)
        if (records[r].size() != width)
            throw ParseError(origin + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(records[r].size()) + " fields, header has " +
                             std::to_string(width));

    // classify columns: numeric iff at least one cell parses and none of the
    // non-missing cells fail; fully non-numeric columns are ignored
    std::vector<bool> numeric(width, false);
    for (std::size_t c = 0; c < width; ++c) {
        bool any_parse = false;
        for (std::size_t r = 1; r < records.size(); ++r) {
            double v;
            if (!is_missing(records[r][c]) && parse_number(records[r][c], v)) {
                any_parse = true;
                break;
            }
        }
        numeric[c] = any_parse;
    }

    std::vector<std::size_t> kept;
    std::size_t target_idx = width;
    SeriesTable table;
    for (std::size_t c = 0; c < width; ++c) {
        std::string name = trim(header[c]);
        if (name == target_column) target_idx = c;
        if (numeric[c])
            kept.push_back(c);
        else
            table.ignored_columns.push_back(name);
    }
    if (target_idx == width) {
        std::string avail;
        for (std::size_t c = 0; c < width; ++c) {
            if (c) avail += ", ";
            avail += trim(header[c]);
        }
        throw ParseError(origin + ": target column '" + target_column +
                         "' not found; available columns: " + avail);
    }
    if (!numeric[target_idx])
        throw ParseError(origin + ": target column '" + target_column + "' is not numeric");

    // move the target to the last slot, keep the rest in file order
    std::vector<std::size_t> order;
    for (std::size_t c : kept)
        if (c != target_idx) order.push_back(c);
    order.push_back(target_idx);
    for (std::size_t c : order) table.columns.push_back(trim(header[c]));

    for (std::size_t r = 1; r < records.size(); ++r) {
        bool missing = false;
        for (std::size_t c : order)
            if (is_missing(records[r][c])) {
                missing = true;
                break;
            }
        if (missing) {
            ++table.dropped_rows;
            continue;
        }
        for (std::size_t c : order) {
            double v;
            if (!parse_number(records[r][c], v))
                throw ParseError(origin + ": row " + std::to_string(r + 1) + ", column '" +
                                 trim(header[c]) + "': cannot parse '" + trim(records[r][c]) +
                                 "' as a number");
            table.values.push_back(v);
        }
        ++table.n_rows;
    }
    return table;
}

SeriesTable load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_csv: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), target_column, path);
}

void write_csv(const SeriesTable& table, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("write_csv: cannot open '" + tmp + "'");
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c) out << ',';
            out << table.columns[c];
        }
        out << '\n';
        char buf[40];
        for (std::size_t r = 0; r < table.rows(); ++r) {
            for (std::size_t c = 0; c < table.cols(); ++c) {
                if (c) out << ',';
                std::snprintf(buf, sizeof buf, "%.17g", table.at(r, c));
                out << buf;
            }
            out << '\n';
        }
        if (!out) throw IoError("write_csv: write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("write_csv: cannot rename '" + tmp + "' to '" + path + "'");
}

std::pair<SeriesTable, Standardization> standardize(const SeriesTable& table,
                                                    std::size_t train_rows) {
    if (train_rows < 2) throw ArgumentError("standardize: need at least 2 train rows");
    if (train_rows > table.rows()) train_rows = table.rows();
    const std::size_t C = table.cols();
    Standardization st;
    st.mean.assign(C, 0.0);
    st.stdev.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < train_rows; ++r) m += table.at(r, c);
        m /= static_cast<double>(train_rows);
        double v = 0.0;
        for (std::size_t r = 0; r < train_rows; ++r) {
            double d = table.at(r, c) - m;
            v += d * d;
        }
        v /= static_cast<double>(train_rows);
        st.mean[c] = m;
        st.stdev[c] = std::max(std::sqrt(v), 1e-8);
    }
    SeriesTable out = table;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < C; ++c) out.at(r, c) = st.to_std(table.at(r, c), c);
    return {std::move(out), std::move(st)};
}

std::size_t WindowedDataset::count(Split s) const {
    std::size_t n = 0;
    for (Split x : split)
        if (x == s) ++n;
    return n;
}

std::vector<std::size_t> WindowedDataset::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(i);
    return out;
}

namespace {

void check_fractions(const std::array<double, 3>& f) {
    double sum = f[0] + f[1] + f[2];
    if (f[0] <= 0.0 || f[1] < 0.0 || f[2] < 0.0 || std::abs(sum - 1.0) > 1e-9)
        throw ArgumentError("split fractions must be non-negative, train > 0, and sum to 1");
}

std::size_t train_window_count(std::size_t m, const std::array<double, 3>& f) {
    auto m_train = static_cast<std::size_t>(std::ceil(f[0] * static_cast<double>(m)));
    return std::min(std::max<std::size_t>(m_train, 1), m);
}

}  // namespace

WindowedDataset make_windows(const SeriesTable& table, std::size_t window,
                             std::array<double, 3> fractions) {
    check_fractions(fractions);
    const std::size_t L = table.rows(), N = table.cols(), T = window;
    if (T < 1) throw ArgumentError("make_windows: window must be >= 1");
    if (L < T + 1)
        throw ArgumentError("make_windows: table has " + std::to_string(L) +
                            " rows, too short for window " + std::to_string(T) +
                            " plus a target row");
    const std::size_t M = L - T;
    const std::size_t m_train = train_window_count(M, fractions);
    auto m_val = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(M)));
    m_val = std::min(m_val, M - m_train);

    WindowedDataset ds;
    ds.window = T;
    ds.n_vars = N;
    ds.columns = table.columns;
    ds.inputs.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
        NdArray w = NdArray::zeros({T, N});
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < N; ++c) w.at2(t, c) = table.at(i + t, c);
        ds.inputs.push_back(std::move(w));
        ds.targets.push_back(table.at(i + T, N - 1));
        ds.start.push_back(i);
        if (i < m_train)
            ds.split.push_back(Split::Train);
        else if (i < m_train + m_val)
            ds.split.push_back(Split::Val);
        else
            ds.split.push_back(Split::Test);
    }
    return ds;
}

WindowedDataset prepare_dataset(const SeriesTable& table, std::size_t window,
                                std::array<double, 3> fractions) {
    check_fractions(fractions);
    const std::size_t L = table.rows(), T = window;
    if (L < T + 1)
        throw ArgumentError("prepare_dataset: table has " + std::to_string(L) +
                            " rows, too short for window " + std::to_string(T) +
                            " plus a target row");
    const std::size_t M = L - T;
    const std::size_t m_train = train_window_count(M, fractions);
    // rows touched by train windows (inputs and targets) define the statistics
    const std::size_t train_rows = std::min(L, m_train + T);
    auto [std_table, stats] = standardize(table, train_rows);
    WindowedDataset ds = make_windows(std_table, window, fractions);
    ds.standardization = std::move(stats);
    return ds;
}

}  // namespace imv
