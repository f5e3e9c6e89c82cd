#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexenc/config.hpp"
#include "flexenc/model.hpp"
#include "flexenc/rng.hpp"

namespace flexenc {

// Valid ratings are the half-step grid 1.0 .. 5.0.
bool rating_in_grid(double v);

struct Rating {
    int user = 0;  // dense user id
    int item = 0;  // dense item id
    double value = 0.0;
};

enum class IngestFormat { Tab4, CsvHeader };
IngestFormat ingest_format_from_name(const std::string& name);  // "tab4" / "csv-header"

// A rating as it appears in an input file, before ID remapping.
struct RawRating {
    std::int64_t user = 0;
    std::int64_t item = 0;
    double value = 0.0;
    std::int64_t timestamp = 0;
};

// Canonical sparse rating triples with the raw->dense ID remap tables. Dense
// IDs are assigned in ascending raw-ID order and are contiguous from 0.
// Subsets produced by split() share the parent's remap tables, so pivot
// dimensions stay consistent across partitions.
struct RatingTable {
    std::vector<Rating> triples;  // sorted by (user, item), no duplicates
    std::vector<std::int64_t> user_raw;  // dense -> raw
    std::vector<std::int64_t> item_raw;
    std::vector<std::int64_t> timestamps;  // parallel to triples; may be empty

    int n_users() const { return static_cast<int>(user_raw.size()); }
    int n_items() const { return static_cast<int>(item_raw.size()); }
    std::size_t size() const { return triples.size(); }

    // Inverse remap; -1 when the raw id is unknown.
    int dense_user(std::int64_t raw) const;
    int dense_item(std::int64_t raw) const;
};

// tab4: user<TAB>item<TAB>rating<TAB>timestamp per line.
// csv-header: "userId,movieId,rating,timestamp" header then comma rows.
// Out-of-grid ratings and malformed lines raise ParseError with the line
// number; duplicate (user,item) pairs keep the last occurrence.
RatingTable ingest(const std::string& path, IngestFormat format);

// Remap + dedup without the file: same rules as ingest.
RatingTable table_from_triples(const std::vector<RawRating>& raw);

// Canonical preprocessed form: ratings.csv (header row_id,col_id,rating, dense
// ids) plus user_map.csv / item_map.csv sidecars (header raw_id,dense_id).
void write_canonical(const RatingTable& table, const std::string& dir);
RatingTable load_canonical(const std::string& dir);

// Record-level Bernoulli split: each triple lands in test with probability
// tsr, independently, deterministic per seed. Timestamps are dropped.
std::pair<RatingTable, RatingTable> split(const RatingTable& table, double tsr,
                                          std::uint64_t seed);

// Row-grouped sparse matrix after pivoting: user-based rows or item-based
// rows; the opposite axis is the column dimension.
struct RowMatrix {
    Pivot pivot = Pivot::UserBased;
    int n_rows = 0;
    int n_cols = 0;
    std::vector<std::size_t> offsets;  // n_rows + 1
    std::vector<int> cols;             // strictly increasing within each row
    std::vector<double> values;

    std::size_t row_size(int r) const { return offsets[r + 1] - offsets[r]; }
    std::size_t size() const { return values.size(); }
};

RowMatrix pivot_table(const RatingTable& table, Pivot pivot);

// Per-row training means; rows with no training ratings carry the global mean.
struct MeanTable {
    std::vector<double> row_mean;
    double global_mean = 0.0;
};

MeanTable compute_means(const RowMatrix& train);

// Shuffled row-index groups of size tbs (the last may be smaller).
std::vector<std::vector<int>> make_batch_plan(int n_rows, int tbs, RngStream& rng);

// Densifies the given rows. Mean normalization replaces observed entries with
// r - mu_row and sets the mask to all ones; otherwise the mask marks observed
// entries. x == y on return.
RowBatch materialize_batch(const RowMatrix& train, const MeanTable& means,
                           const std::vector<int>& rows, bool mean_normalization);

// Convenience composition of the plan and materialization.
std::vector<RowBatch> make_batches(const RowMatrix& train, const MeanTable& means, int tbs,
                                   bool mean_normalization, std::uint64_t seed);

}  // namespace flexenc
