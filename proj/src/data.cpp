#include "flexenc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {

[[noreturn]] void line_error(const std::string& path, std::size_t line_no,
                             const std::string& detail) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + detail);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::int64_t to_i64(const std::string& path, std::size_t line_no, const std::string& s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        line_error(path, line_no, "malformed integer '" + s + "'");
    }
    return v;
}

double to_real(const std::string& path, std::size_t line_no, const std::string& s) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) line_error(path, line_no, "malformed number '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        line_error(path, line_no, "malformed number '" + s + "'");
    }
}

RatingTable build_table(const std::string& path, std::vector<RawTriple> raw) {
    if (raw.empty()) throw EmptyDataError("'" + path + "': no ratings");

    // Last occurrence wins per (user, item).
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> last;
    for (std::size_t i = 0; i < raw.size(); ++i) last[{raw[i].user, raw[i].item}] = i;

    RatingTable table;
    {
        std::vector<std::int64_t> users, items;
        users.reserve(last.size());
        items.reserve(last.size());
        for (const auto& [key, idx] : last) {
            users.push_back(key.first);
            items.push_back(key.second);
        }
        std::sort(users.begin(), users.end());
        users.erase(std::unique(users.begin(), users.end()), users.end());
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        table.user_raw = std::move(users);
        table.item_raw = std::move(items);
    }

    table.triples.reserve(last.size());
    table.timestamps.reserve(last.size());
    // std::map iterates (user, item) ascending; remap preserves that order.
    for (const auto& [key, idx] : last) {
        Rating r;
        r.user = table.dense_user(key.first);
        r.item = table.dense_item(key.second);
        r.value = raw[idx].value;
        table.triples.push_back(r);
        table.timestamps.push_back(raw[idx].timestamp);
    }
    return table;
}

}  // namespace

bool rating_in_grid(double v) {
    if (!(v >= 1.0 && v <= 5.0)) return false;
    double doubled = v * 2.0;
    return doubled == std::floor(doubled);
}

IngestFormat ingest_format_from_name(const std::string& name) {
    if (name == "tab4") return IngestFormat::Tab4;
    if (name == "csv-header") return IngestFormat::CsvHeader;
    throw ConfigError("unknown ingest format '" + name + "' (want tab4 or csv-header)");
}

int RatingTable::dense_user(std::int64_t raw) const {
    auto it = std::lower_bound(user_raw.begin(), user_raw.end(), raw);
    if (it == user_raw.end() || *it != raw) return -1;
    return static_cast<int>(it - user_raw.begin());
}

int RatingTable::dense_item(std::int64_t raw) const {
    auto it = std::lower_bound(item_raw.begin(), item_raw.end(), raw);
    if (it == item_raw.end() || *it != raw) return -1;
    return static_cast<int>(it - item_raw.begin());
}

RatingTable ingest(const std::string& path, IngestFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::vector<RawTriple> raw;
    std::string line;
    std::size_t line_no = 0;

    if (format == IngestFormat::CsvHeader) {
        if (!std::getline(in, line)) throw EmptyDataError("'" + path + "': no ratings");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "userId,movieId,rating,timestamp") {
            line_error(path, line_no, "expected header 'userId,movieId,rating,timestamp'");
        }
    }

    const char sep = format == IngestFormat::Tab4 ? '\t' : ',';
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line, sep);
        if (fields.size() != 4) {
            line_error(path, line_no,
                       "expected 4 fields, got " + std::to_string(fields.size()));
        }
        RawTriple t;
        t.user = to_i64(path, line_no, fields[0]);
        t.item = to_i64(path, line_no, fields[1]);
        t.value = to_real(path, line_no, fields[2]);
        t.timestamp = to_i64(path, line_no, fields[3]);
        if (!rating_in_grid(t.value)) {
            line_error(path, line_no, "rating " + fields[2] + " outside the 1.0..5.0 grid");
        }
        raw.push_back(t);
    }
    return build_table(path, raw);
}

void write_canonical(const RatingTable& table, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "ratings.csv");
        if (!out) throw IoError("cannot write '" + dir + "/ratings.csv'");
        out << "row_id,col_id,rating\n";
        for (const Rating& r : table.triples) {
            out << r.user << ',' << r.item << ',' << format_double(r.value) << '\n';
        }
    }
    auto write_map = [&](const std::string& name, const std::vector<std::int64_t>& raw) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw IoError("cannot write '" + dir + "/" + name + "'");
        out << "raw_id,dense_id\n";
        for (std::size_t i = 0; i < raw.size(); ++i) out << raw[i] << ',' << i << '\n';
    };
    write_map("user_map.csv", table.user_raw);
    write_map("item_map.csv", table.item_raw);
}

RatingTable load_canonical(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string path = (fs::path(dir) / "ratings.csv").string();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw EmptyDataError("'" + path + "': no ratings");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "row_id,col_id,rating") {
        line_error(path, line_no, "expected header 'row_id,col_id,rating'");
    }

    RatingTable table;
    int max_user = -1, max_item = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line, ',');
        if (fields.size() != 3) {
            line_error(path, line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        Rating r;
        r.user = static_cast<int>(to_i64(path, line_no, fields[0]));
        r.item = static_cast<int>(to_i64(path, line_no, fields[1]));
        r.value = to_real(path, line_no, fields[2]);
        if (r.user < 0 || r.item < 0) line_error(path, line_no, "negative dense id");
        if (!rating_in_grid(r.value)) {
            line_error(path, line_no, "rating " + fields[2] + " outside the 1.0..5.0 grid");
        }
        max_user = std::max(max_user, r.user);
        max_item = std::max(max_item, r.item);
        table.triples.push_back(r);
    }
    if (table.triples.empty()) throw EmptyDataError("'" + path + "': no ratings");
    std::sort(table.triples.begin(), table.triples.end(), [](const Rating& a, const Rating& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });

    // Sidecar maps give the raw ids; fall back to identity when absent.
    auto read_map = [&](const std::string& name, int expected) {
        std::vector<std::int64_t> raw;
        std::ifstream map_in(fs::path(dir) / name);
        if (!map_in) {
            for (int i = 0; i <= expected; ++i) raw.push_back(i);
            return raw;
        }
        std::string map_line;
        std::getline(map_in, map_line);  // header
        while (std::getline(map_in, map_line)) {
            if (!map_line.empty() && map_line.back() == '\r') map_line.pop_back();
            if (map_line.empty()) continue;
            std::vector<std::string> f = split_fields(map_line, ',');
            if (f.size() != 2) continue;
            raw.push_back(to_i64(name, 0, f[0]));
        }
        while (static_cast<int>(raw.size()) <= expected) {
            raw.push_back(raw.empty() ? 0 : raw.back() + 1);
        }
        return raw;
    };
    table.user_raw = read_map("user_map.csv", max_user);
    table.item_raw = read_map("item_map.csv", max_item);
    return table;
}

std::pair<RatingTable, RatingTable> split(const RatingTable& table, double tsr,
                                          std::uint64_t seed) {
    if (!(tsr >= 0.0 && tsr < 1.0)) {
        throw ConfigError("split: test split rate must be in [0,1), got " + format_double(tsr));
    }
    RatingTable train, test;
    train.user_raw = table.user_raw;
    train.item_raw = table.item_raw;
    test.user_raw = table.user_raw;
    test.item_raw = table.item_raw;
    RngStream rng = RngStream(seed).child("split");
    for (const Rating& r : table.triples) {
        if (rng.uniform() < tsr) {
            test.triples.push_back(r);
        } else {
            train.triples.push_back(r);
        }
    }
    return {std::move(train), std::move(test)};
}

RowMatrix pivot_table(const RatingTable& table, Pivot pivot) {
    if (table.triples.empty()) throw EmptyDataError("pivot: table is empty");
    RowMatrix m;
    m.pivot = pivot;
    const bool user_rows = pivot == Pivot::UserBased;
    m.n_rows = user_rows ? table.n_users() : table.n_items();
    m.n_cols = user_rows ? table.n_items() : table.n_users();

    std::vector<std::size_t> counts(static_cast<std::size_t>(m.n_rows) + 1, 0);
    for (const Rating& r : table.triples) {
        ++counts[static_cast<std::size_t>(user_rows ? r.user : r.item) + 1];
    }
    m.offsets.resize(static_cast<std::size_t>(m.n_rows) + 1, 0);
    for (int i = 0; i < m.n_rows; ++i) m.offsets[i + 1] = m.offsets[i] + counts[i + 1];

    m.cols.resize(table.size());
    m.values.resize(table.size());
    std::vector<std::size_t> next(m.offsets.begin(), m.offsets.end() - 1);
    for (const Rating& r : table.triples) {
        const int row = user_rows ? r.user : r.item;
        const int col = user_rows ? r.item : r.user;
        const std::size_t at = next[row]++;
        m.cols[at] = col;
        m.values[at] = r.value;
    }
    // Triples are sorted by (user, item); the item pivot needs per-row sorting.
    if (!user_rows) {
        for (int row = 0; row < m.n_rows; ++row) {
            std::size_t lo = m.offsets[row], hi = m.offsets[row + 1];
            std::vector<std::pair<int, double>> entries;
            entries.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) entries.emplace_back(m.cols[i], m.values[i]);
            std::sort(entries.begin(), entries.end());
            for (std::size_t i = lo; i < hi; ++i) {
                m.cols[i] = entries[i - lo].first;
                m.values[i] = entries[i - lo].second;
            }
        }
    }
    return m;
}

MeanTable compute_means(const RowMatrix& train) {
    if (train.values.empty()) throw EmptyDataError("compute_means: matrix has no ratings");
    MeanTable means;
    double total = 0.0;
    for (double v : train.values) total += v;
    means.global_mean = total / static_cast<double>(train.values.size());
    means.row_mean.resize(train.n_rows);
    for (int r = 0; r < train.n_rows; ++r) {
        const std::size_t lo = train.offsets[r], hi = train.offsets[r + 1];
        if (hi == lo) {
            means.row_mean[r] = means.global_mean;
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sum += train.values[i];
        means.row_mean[r] = sum / static_cast<double>(hi - lo);
    }
    return means;
}

std::vector<std::vector<int>> make_batch_plan(int n_rows, int tbs, RngStream& rng) {
    if (tbs < 1) throw ConfigError("batch size must be >= 1");
    std::vector<int> order(n_rows);
    for (int i = 0; i < n_rows; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<int>> plan;
    for (int start = 0; start < n_rows; start += tbs) {
        const int end = std::min(n_rows, start + tbs);
        plan.emplace_back(order.begin() + start, order.begin() + end);
    }
    return plan;
}

RowBatch materialize_batch(const RowMatrix& train, const MeanTable& means,
                           const std::vector<int>& rows, bool mean_normalization) {
    RowBatch batch;
    const std::size_t width = static_cast<std::size_t>(train.n_cols);
    batch.y = DenseMatrix(rows.size(), width);
    batch.mask = DenseMatrix(rows.size(), width);
    if (mean_normalization) batch.mask.fill(1.0);
    batch.row_ids = rows;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        const int r = rows[s];
        double* yr = batch.y.row(s);
        double* mr = batch.mask.row(s);
        const double mu = means.row_mean[r];
        for (std::size_t i = train.offsets[r]; i < train.offsets[r + 1]; ++i) {
            const int c = train.cols[i];
            yr[c] = mean_normalization ? train.values[i] - mu : train.values[i];
            if (!mean_normalization) mr[c] = 1.0;
        }
    }
    batch.x = batch.y;
    return batch;
}

std::vector<RowBatch> make_batches(const RowMatrix& train, const MeanTable& means, int tbs,
                                   bool mean_normalization, std::uint64_t seed) {
    RngStream rng = RngStream(seed).child("shuffle");
    std::vector<RowBatch> batches;
    for (const std::vector<int>& rows : make_batch_plan(train.n_rows, tbs, rng)) {
        batches.push_back(materialize_batch(train, means, rows, mean_normalization));
    }
    return batches;
}

}  // namespace flexenc
