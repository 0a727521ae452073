#include "gpscan/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace gpscan {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// days_from_civil / civil_from_days (proleptic Gregorian, Hinnant's algorithm)
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Quote-aware single-line CSV field splitter.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0, tail = 0;
    int n = std::sscanf(text.c_str(), "%d-%2u-%2u%c%2u:%2u:%2u%c", &y, &mo, &d, &sep, &h, &mi,
                        &sec, &tail);
    if (n == 3) {
        // date only; reject trailing junk
        char extra = 0;
        if (std::sscanf(text.c_str(), "%*d-%*2u-%*2u%c", &extra) == 1) return std::nullopt;
    } else if (n == 7 || n == 8) {
        if (sep != 'T' && sep != ' ') return std::nullopt;
        if (n == 8 && tail != 'Z') return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
        return std::nullopt;
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + sec;
}

std::string format_iso8601(std::int64_t time_s) {
    std::int64_t day = time_s / kSecondsPerDay;
    std::int64_t rem = time_s % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --day;
    }
    int y;
    unsigned mo, d;
    civil_from_days(day, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

LoadResult load_events_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("load_events_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw IngestError("load_events_csv: empty file (no header)", {});
    const std::vector<std::string> header = split_csv(line);
    auto col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int c_lat = col(schema.lat), c_lon = col(schema.lon), c_time = col(schema.time);
    const int c_stream = col(schema.stream), c_count = col(schema.count);
    if (c_lat < 0 || c_lon < 0 || c_time < 0)
        throw IngestError("load_events_csv: header lacks required columns (" + schema.lat + ", " +
                              schema.lon + ", " + schema.time + ")",
                          {header.empty() ? "" : line});

    LoadResult out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        ++out.rows_total;
        const std::vector<std::string> f = split_csv(line);
        auto fail = [&](const std::string& why) {
            ++out.rows_failed;
            if (out.diagnostics.size() < 10)
                out.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        const int needed = std::max({c_lat, c_lon, c_time, c_stream, c_count});
        if (static_cast<int>(f.size()) <= needed) {
            fail("too few fields");
            continue;
        }
        const auto lat = parse_double(f[c_lat]);
        const auto lon = parse_double(f[c_lon]);
        if (!lat || !lon) {
            fail("unparseable coordinate");
            continue;
        }
        const auto t = parse_iso8601(f[c_time]);
        if (!t) {
            fail("unparseable timestamp '" + f[c_time] + "'");
            continue;
        }
        EventRecord rec;
        rec.lat = *lat;
        rec.lon = *lon;
        rec.time_s = *t;
        if (c_stream >= 0) rec.stream = f[c_stream];
        if (c_count >= 0 && !f[c_count].empty()) {
            const auto cnt = parse_double(f[c_count]);
            if (!cnt || *cnt < 0.0 || *cnt != std::floor(*cnt)) {
                fail("count is not a nonnegative integer");
                continue;
            }
            rec.count = *cnt;
        }
        out.events.push_back(std::move(rec));
    }

    if (out.rows_total > 0 &&
        static_cast<double>(out.rows_failed) / static_cast<double>(out.rows_total) >
            schema.failure_cap) {
        std::string msg = "load_events_csv: " + std::to_string(out.rows_failed) + "/" +
                          std::to_string(out.rows_total) + " rows failed (cap " +
                          fmt_double(schema.failure_cap) + ")";
        throw IngestError(msg, out.diagnostics);
    }
    return out;
}

void save_events_csv(const std::string& path, const std::vector<EventRecord>& events) {
    std::ofstream outf(path);
    if (!outf) throw IoError("save_events_csv: cannot write " + path);
    outf << "lat,lon,timestamp,stream,count\n";
    for (const auto& e : events) {
        outf << fmt_double(e.lat) << ',' << fmt_double(e.lon) << ',' << format_iso8601(e.time_s)
             << ',' << e.stream << ',' << fmt_double(e.count) << '\n';
    }
}

void GridSpec::validate() const {
    if (!(cell_size > 0.0)) throw InputError("GridSpec: cell_size must be positive");
    if (bin.unit == TemporalBin::Unit::CustomDays && !(bin.days > 0.0))
        throw InputError("GridSpec: temporal bin length must be positive");
    if (bounds) {
        if (!(bounds->lat_max > bounds->lat_min) || !(bounds->lon_max > bounds->lon_min))
            throw InputError("GridSpec: empty bounding box");
    }
}

DatasetBundle grid_aggregate(const std::vector<EventRecord>& events, const GridSpec& spec) {
    spec.validate();
    if (events.empty()) throw InputError("grid_aggregate: no events");

    GeoBounds b;
    if (spec.bounds) {
        b = *spec.bounds;
    } else {
        b.lat_min = b.lat_max = events.front().lat;
        b.lon_min = b.lon_max = events.front().lon;
        for (const auto& e : events) {
            b.lat_min = std::min(b.lat_min, e.lat);
            b.lat_max = std::max(b.lat_max, e.lat);
            b.lon_min = std::min(b.lon_min, e.lon);
            b.lon_max = std::max(b.lon_max, e.lon);
        }
        // nudge the upper edges so extreme events stay inside the half-open cells
        b.lat_max = std::nextafter(b.lat_max, std::numeric_limits<double>::infinity());
        b.lon_max = std::nextafter(b.lon_max, std::numeric_limits<double>::infinity());
    }

    double dlat = spec.cell_size, dlon = spec.cell_size;
    if (spec.cell_unit == GridSpec::CellUnit::Meters) {
        const double mid_lat = (b.lat_min + b.lat_max) / 2.0;
        const double cosphi = std::max(0.01, std::cos(mid_lat * std::numbers::pi / 180.0));
        dlat = spec.cell_size / 111320.0;
        dlon = spec.cell_size / (111320.0 * cosphi);
    }
    const int n_lat = std::max<int>(1, static_cast<int>(std::ceil((b.lat_max - b.lat_min) / dlat)));
    const int n_lon = std::max<int>(1, static_cast<int>(std::ceil((b.lon_max - b.lon_min) / dlon)));

    // Temporal binning anchored at the first event's bin start.
    std::int64_t t_min = events.front().time_s;
    std::int64_t t_max = t_min;
    for (const auto& e : events) {
        t_min = std::min(t_min, e.time_s);
        t_max = std::max(t_max, e.time_s);
    }

    const bool monthly = spec.bin.unit == TemporalBin::Unit::Month;
    double bin_seconds = kSecondsPerDay;
    if (spec.bin.unit == TemporalBin::Unit::Week) bin_seconds = 7.0 * kSecondsPerDay;
    if (spec.bin.unit == TemporalBin::Unit::CustomDays) bin_seconds = spec.bin.days * kSecondsPerDay;

    std::int64_t anchor_day = t_min / kSecondsPerDay;
    if (t_min % kSecondsPerDay < 0) --anchor_day;
    const double anchor_s = static_cast<double>(anchor_day) * kSecondsPerDay;

    int y0 = 0;
    unsigned m0 = 0, d0u = 0;
    civil_from_days(anchor_day, y0, m0, d0u);

    auto bin_index = [&](std::int64_t t) -> int {
        if (monthly) {
            std::int64_t day = t / kSecondsPerDay;
            if (t % kSecondsPerDay < 0) --day;
            int y;
            unsigned m, d;
            civil_from_days(day, y, m, d);
            return (y - y0) * 12 + static_cast<int>(m) - static_cast<int>(m0);
        }
        return static_cast<int>(std::floor((static_cast<double>(t) - anchor_s) / bin_seconds));
    };
    auto bin_center_s = [&](int idx) -> double {
        if (monthly) {
            const int month_total = (y0 * 12 + static_cast<int>(m0) - 1) + idx;
            const int ys = month_total / 12, ms = month_total % 12 + 1;
            const int month_next = month_total + 1;
            const int ye = month_next / 12, me = month_next % 12 + 1;
            const double start = static_cast<double>(days_from_civil(ys, ms, 1)) * kSecondsPerDay;
            const double end = static_cast<double>(days_from_civil(ye, me, 1)) * kSecondsPerDay;
            return (start + end) / 2.0;
        }
        return anchor_s + (idx + 0.5) * bin_seconds;
    };

    const int n_bins = bin_index(t_max) + 1;

    // Stream labels in sorted order; one full grid per stream.
    std::map<std::string, std::size_t> stream_of;
    for (const auto& e : events) stream_of.emplace(e.stream, 0);
    std::size_t si = 0;
    for (auto& [label, idx] : stream_of) idx = si++;

    const std::size_t cells = static_cast<std::size_t>(n_lat) * n_lon * n_bins;
    std::vector<Eigen::VectorXd> ys(stream_of.size(), Eigen::VectorXd::Zero(cells));

    DatasetBundle out;
    for (const auto& e : events) {
        if (e.lat < b.lat_min || e.lat >= b.lat_max || e.lon < b.lon_min || e.lon >= b.lon_max) {
            ++out.dropped_outside;
            continue;
        }
        const int la = std::min(n_lat - 1, static_cast<int>(std::floor((e.lat - b.lat_min) / dlat)));
        const int lo = std::min(n_lon - 1, static_cast<int>(std::floor((e.lon - b.lon_min) / dlon)));
        const int bi = bin_index(e.time_s);
        if (bi < 0 || bi >= n_bins) {
            ++out.dropped_outside;
            continue;
        }
        const std::size_t row =
            (static_cast<std::size_t>(la) * n_lon + lo) * n_bins + bi;
        ys[stream_of[e.stream]][row] += e.count;
    }

    Eigen::MatrixXd x(cells, 3);
    const double t0_center = bin_center_s(0);
    std::size_t row = 0;
    for (int la = 0; la < n_lat; ++la)
        for (int lo = 0; lo < n_lon; ++lo)
            for (int bi = 0; bi < n_bins; ++bi, ++row) {
                x(row, 0) = b.lat_min + (la + 0.5) * dlat;
                x(row, 1) = b.lon_min + (lo + 0.5) * dlon;
                x(row, 2) = (bin_center_s(bi) - t0_center) / kSecondsPerDay;
            }

    for (auto& [label, idx] : stream_of) {
        Eigen::VectorXd y = ys[idx];
        if (spec.sqrt_transform) y = y.array().sqrt();
        out.labels.push_back(label);
        out.streams.emplace_back(x, std::move(y));
    }
    return out;
}

void save_dataset_csv(const std::string& path, const DatasetBundle& bundle) {
    if (bundle.streams.empty()) throw InputError("save_dataset_csv: no streams");
    std::ofstream outf(path);
    if (!outf) throw IoError("save_dataset_csv: cannot write " + path);

    const int dims = bundle.streams.front().dim();
    const bool with_stream = bundle.streams.size() > 1 ||
                             (!bundle.labels.empty() && !bundle.labels.front().empty());
    bool with_truth = false;
    for (const auto& t : bundle.truth) with_truth |= !t.empty();

    for (int j = 0; j < dims; ++j) outf << 'x' << (j + 1) << ',';
    outf << 'y';
    if (with_stream) outf << ",stream";
    if (with_truth) outf << ",truth";
    outf << '\n';

    for (std::size_t s = 0; s < bundle.streams.size(); ++s) {
        const Dataset& d = bundle.streams[s];
        std::vector<std::uint8_t> truth_mask(d.size(), 0);
        if (s < bundle.truth.size())
            for (int i : bundle.truth[s]) truth_mask.at(i) = 1;
        const std::string label =
            s < bundle.labels.size() ? bundle.labels[s] : std::to_string(s);
        for (int i = 0; i < d.size(); ++i) {
            for (int j = 0; j < dims; ++j) outf << fmt_double(d.x(i, j)) << ',';
            outf << fmt_double(d.y[i]);
            if (with_stream) outf << ',' << label;
            if (with_truth) outf << ',' << static_cast<int>(truth_mask[i]);
            outf << '\n';
        }
    }
}

DatasetBundle load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IngestError("load_dataset_csv: empty file", {});
    const std::vector<std::string> header = split_csv(line);

    int dims = 0;
    while (dims < static_cast<int>(header.size()) &&
           header[dims] == "x" + std::to_string(dims + 1))
        ++dims;
    if (dims == 0 || dims >= static_cast<int>(header.size()) || header[dims] != "y")
        throw IngestError("load_dataset_csv: expected columns x1..xD, y", {line});
    int c_stream = -1, c_truth = -1;
    for (std::size_t i = dims + 1; i < header.size(); ++i) {
        if (header[i] == "stream") c_stream = static_cast<int>(i);
        if (header[i] == "truth") c_truth = static_cast<int>(i);
    }

    struct Rows {
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        std::vector<int> truth;
    };
    std::map<std::string, Rows> per_stream;
    std::vector<std::string> order;  // first-seen stream order
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv(line);
        if (static_cast<int>(f.size()) < dims + 1)
            throw IngestError("load_dataset_csv: too few fields at line " + std::to_string(line_no),
                              {line});
        std::vector<double> xs(dims);
        for (int j = 0; j < dims; ++j) {
            const auto v = parse_double(f[j]);
            if (!v) throw IngestError("load_dataset_csv: bad covariate at line " +
                                          std::to_string(line_no),
                                      {line});
            xs[j] = *v;
        }
        const auto yv = parse_double(f[dims]);
        if (!yv)
            throw IngestError("load_dataset_csv: bad response at line " + std::to_string(line_no),
                              {line});
        const std::string label = c_stream >= 0 && c_stream < static_cast<int>(f.size())
                                      ? f[c_stream]
                                      : std::string();
        auto it = per_stream.find(label);
        if (it == per_stream.end()) {
            it = per_stream.emplace(label, Rows{}).first;
            order.push_back(label);
        }
        Rows& rows = it->second;
        if (c_truth >= 0 && c_truth < static_cast<int>(f.size()) && f[c_truth] == "1")
            rows.truth.push_back(static_cast<int>(rows.y.size()));
        rows.x.push_back(std::move(xs));
        rows.y.push_back(*yv);
    }
    if (per_stream.empty()) throw IngestError("load_dataset_csv: no data rows", {});

    DatasetBundle out;
    for (const auto& label : order) {
        const Rows& rows = per_stream[label];
        Eigen::MatrixXd x(rows.y.size(), dims);
        Eigen::VectorXd y(rows.y.size());
        for (std::size_t i = 0; i < rows.y.size(); ++i) {
            for (int j = 0; j < dims; ++j) x(i, j) = rows.x[i][j];
            y[i] = rows.y[i];
        }
        out.labels.push_back(label);
        out.streams.emplace_back(std::move(x), std::move(y));
        out.truth.push_back(rows.truth);
    }
    return out;
}

namespace {

double coord_or_zero(const Eigen::MatrixXd& x, int row, int col) {
    return col < x.cols() ? x(row, col) : 0.0;
}

}  // namespace

void export_results(const std::vector<ScanResult>& ranked, const std::vector<Dataset>& streams,
                    const std::optional<SignificanceReport>& significance,
                    const std::string& path, ResultFormat format,
                    const std::string& config_echo) {
    if (ranked.empty()) throw InputError("export_results: no results to write");
    if (streams.empty()) throw InputError("export_results: stream datasets required");

    auto p_value_of = [&](const ScanResult& r) -> std::optional<double> {
        if (!significance) return std::nullopt;
        return empirical_p_value(significance->null_max_llrs, r.subset.llr);
    };
    auto significant_of = [&](const ScanResult& r) -> std::optional<bool> {
        if (!significance) return std::nullopt;
        return r.subset.llr > significance->threshold;
    };
    auto seed_coord = [&](const ScanResult& r, std::size_t j) -> double {
        return j < r.seed_coords.size() ? r.seed_coords[j] : 0.0;
    };

    if (format == ResultFormat::Csv) {
        std::ofstream outf(path);
        if (!outf) throw IoError("export_results: cannot write " + path);
        std::istringstream echo(config_echo);
        std::string echo_line;
        while (std::getline(echo, echo_line)) outf << "# " << echo_line << '\n';
        outf << "rank,seed_lat,seed_lon,seed_t,member_lat,member_lon,member_t,member_stream,"
                "member_index,beta,llr,p_value,significant\n";
        int rank = 1;
        for (const auto& r : ranked) {
            const auto p = p_value_of(r);
            const auto sig = significant_of(r);
            auto write_row = [&](const std::string& mlat, const std::string& mlon,
                                 const std::string& mt, const std::string& mstream,
                                 const std::string& midx) {
                outf << rank << ',' << fmt_double(seed_coord(r, 0)) << ','
                     << fmt_double(seed_coord(r, 1)) << ',' << fmt_double(seed_coord(r, 2)) << ','
                     << mlat << ',' << mlon << ',' << mt << ',' << mstream << ',' << midx << ','
                     << fmt_double(r.subset.beta_star) << ',' << fmt_double(r.subset.llr) << ','
                     << (p ? fmt_double(*p) : "") << ',' << (sig ? (*sig ? "1" : "0") : "")
                     << '\n';
            };
            if (r.members.empty()) {
                write_row("", "", "", "", "");
            } else {
                for (const auto& m : r.members) {
                    const Eigen::MatrixXd& x = streams.at(m.stream).x;
                    write_row(fmt_double(coord_or_zero(x, m.index, 0)),
                              fmt_double(coord_or_zero(x, m.index, 1)),
                              fmt_double(coord_or_zero(x, m.index, 2)), std::to_string(m.stream),
                              std::to_string(m.index));
                }
            }
            ++rank;
        }
        return;
    }

    nlohmann::json doc;
    doc["version"] = 1;
    doc["config_echo"] = config_echo;
    if (significance) {
        doc["significance"] = {{"alpha", significance->alpha},
                               {"replicates", significance->replicates},
                               {"threshold", significance->threshold}};
    }
    nlohmann::json results = nlohmann::json::array();
    int rank = 1;
    for (const auto& r : ranked) {
        nlohmann::json jr;
        jr["rank"] = rank++;
        jr["llr"] = r.subset.llr;
        jr["beta"] = r.subset.beta_star;
        const auto p = p_value_of(r);
        jr["p_value"] = p ? nlohmann::json(*p) : nlohmann::json(nullptr);
        const auto sig = significant_of(r);
        jr["significant"] = sig ? nlohmann::json(*sig) : nlohmann::json(nullptr);
        jr["seed"] = {{"lat", seed_coord(r, 0)}, {"lon", seed_coord(r, 1)}, {"t", seed_coord(r, 2)}};
        nlohmann::json members = nlohmann::json::array();
        for (const auto& m : r.members) {
            const Eigen::MatrixXd& x = streams.at(m.stream).x;
            members.push_back({{"lat", coord_or_zero(x, m.index, 0)},
                               {"lon", coord_or_zero(x, m.index, 1)},
                               {"t", coord_or_zero(x, m.index, 2)},
                               {"stream", m.stream},
                               {"index", m.index}});
        }
        jr["members"] = std::move(members);
        results.push_back(std::move(jr));
    }
    doc["results"] = std::move(results);

    std::ofstream outf(path);
    if (!outf) throw IoError("export_results: cannot write " + path);
    outf << doc.dump(2) << '\n';
}

}  // namespace gpscan
