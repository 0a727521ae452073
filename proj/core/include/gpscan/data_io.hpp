#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpscan/significance.hpp"

namespace gpscan {

/// One spatiotemporal event row.
struct EventRecord {
    double lat = 0.0;
    double lon = 0.0;
    std::int64_t time_s = 0;  // seconds since the Unix epoch, UTC
    std::string stream;       // empty for single-stream data
    double count = 1.0;       // nonnegative integer stored as double

    bool operator==(const EventRecord&) const = default;
};

/// "YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS" or "YYYY-MM-DDTHH:MM:SS[Z]".
std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t time_s);

/// Header-name mapping for event CSVs plus the parse-failure cap.
struct CsvSchema {
    std::string lat = "lat";
    std::string lon = "lon";
    std::string time = "timestamp";
    std::string stream = "stream";  // optional column
    std::string count = "count";    // optional column
    double failure_cap = 0.01;      // failed/total above this raises IngestError
};

struct LoadResult {
    std::vector<EventRecord> events;
    std::size_t rows_total = 0;
    std::size_t rows_failed = 0;
    std::vector<std::string> diagnostics;  // first few failure descriptions
};

LoadResult load_events_csv(const std::string& path, const CsvSchema& schema = {});
void save_events_csv(const std::string& path, const std::vector<EventRecord>& events);

struct GeoBounds {
    double lat_min = 0.0, lat_max = 0.0;
    double lon_min = 0.0, lon_max = 0.0;
};

struct TemporalBin {
    enum class Unit { Day, Week, Month, CustomDays };
    Unit unit = Unit::Day;
    double days = 1.0;  // used by CustomDays
};

struct GridSpec {
    double cell_size = 0.01;
    enum class CellUnit { Degrees, Meters } cell_unit = CellUnit::Degrees;
    TemporalBin bin;
    std::optional<GeoBounds> bounds;  // default: data extent
    bool sqrt_transform = false;      // sqrt of the counts as the response
    void validate() const;
};

/// One Dataset per stream on a shared (lat, lon, time) grid. Covariate
/// columns are cell-center latitude, cell-center longitude, and bin-center
/// time in days since the first bin. Cell-bins inside the bounds with no
/// events carry y = 0.
struct DatasetBundle {
    std::vector<std::string> labels;  // "" for unlabeled single-stream data
    std::vector<Dataset> streams;
    std::vector<std::vector<int>> truth;  // optional per-stream truth indices
    std::size_t dropped_outside = 0;      // events outside explicit bounds

    bool single() const { return streams.size() == 1; }
};

DatasetBundle grid_aggregate(const std::vector<EventRecord>& events, const GridSpec& spec);

/// Pre-aggregated dataset CSV: columns x1..xD, y, then optional stream and
/// truth columns. Used by the synth/scan pipeline.
void save_dataset_csv(const std::string& path, const DatasetBundle& bundle);
DatasetBundle load_dataset_csv(const std::string& path);

enum class ResultFormat { Json, Csv };

/// Write a ranked scan (optionally with significance data) to disk.
/// CSV emits one row per (result, member); JSON carries the versioned
/// schema {version, config_echo, results: [...]} with per-member
/// coordinates resolved from the stream datasets.
void export_results(const std::vector<ScanResult>& ranked, const std::vector<Dataset>& streams,
                    const std::optional<SignificanceReport>& significance,
                    const std::string& path, ResultFormat format,
                    const std::string& config_echo = "");

}  // namespace gpscan
