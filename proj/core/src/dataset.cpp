#include "tracecast/dataset.hpp"

#include "tracecast/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tracecast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const std::string& path) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError(path + ": row " + std::to_string(row) + ", column " +
                        std::to_string(col) + ": cannot parse \"" + cell +
                        "\" as a number");
    return v;
}

void format_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

Trace load_trace(const std::string& path, std::size_t expected_runs) {
    if (expected_runs == 0)
        throw DataError("load_trace: expected_runs must be positive");

    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open trace file: " + path);

    std::string line;
    if (!std::getline(f, line))
        throw DataError(path + ": empty file, header row required");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "time")
        throw DataError(path + ": first header column must be \"time\"");
    if (header.size() < 2)
        throw DataError(path + ": no variable columns after \"time\"");

    std::vector<std::string> names(header.begin() + 1, header.end());
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j])
                throw DataError(path + ": duplicate variable name \"" + names[i] + "\"");

    const std::size_t D = names.size();
    std::vector<double> data;
    std::vector<double> times;
    std::size_t row = 1;  // header was row 1
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != D + 1)
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(D + 1));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].empty())
                throw DataError(path + ": row " + std::to_string(row) + ", column " +
                                std::to_string(c + 1) + ": missing value");
            const double v = parse_cell(cells[c], row, c + 1, path);
            if (c == 0)
                times.push_back(v);
            else
                data.push_back(v);
        }
    }

    const std::size_t M = times.size();
    if (M == 0)
        throw DataError(path + ": no data rows");
    if (M % expected_runs != 0)
        throw DataError(path + ": " + std::to_string(M) +
                        " rows are not divisible into " + std::to_string(expected_runs) +
                        " runs");

    Trace trace;
    trace.values = Tensor({M, D}, std::move(data));
    trace.variable_names = std::move(names);
    trace.run_count = expected_runs;
    trace.run_length = M / expected_runs;
    trace.sample_interval_s = M >= 2 ? times[1] - times[0] : 0.1;
    return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
    const std::size_t M = trace.rows();
    const std::size_t D = trace.variables();
    if (trace.variable_names.size() != D)
        throw ShapeError("save_trace: " + std::to_string(trace.variable_names.size()) +
                         " names for " + std::to_string(D) + " variables");

    std::string out = "time";
    for (const std::string& name : trace.variable_names) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t r = 0; r < M; ++r) {
        format_number(out, static_cast<double>(r) * trace.sample_interval_s);
        for (std::size_t c = 0; c < D; ++c) {
            out += ',';
            format_number(out, trace.values.at(r, c));
        }
        out += '\n';
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open trace file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw DataError("write failed for trace file: " + path);
}

std::pair<Trace, NormalizationRecord> fit_normalize(const Trace& trace,
                                                    std::size_t fit_row_count) {
    const std::size_t M = trace.rows();
    const std::size_t D = trace.variables();
    if (fit_row_count == 0 || fit_row_count > M)
        throw DataError("fit_normalize: fit row count " + std::to_string(fit_row_count) +
                        " outside 1.." + std::to_string(M));

    NormalizationRecord rec;
    rec.min.resize(D);
    rec.max.resize(D);
    for (std::size_t c = 0; c < D; ++c) {
        double lo = trace.values.at(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < fit_row_count; ++r) {
            const double v = trace.values.at(r, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rec.min[c] = lo;
        rec.max[c] = hi;
    }

    Trace out = trace;
    for (std::size_t c = 0; c < D; ++c) {
        const double range = rec.max[c] - rec.min[c];
        for (std::size_t r = 0; r < M; ++r) {
            double& v = out.values.at(r, c);
            v = range == 0.0 ? 0.0 : (v - rec.min[c]) / range;
        }
    }
    return {std::move(out), std::move(rec)};
}

Tensor denormalize(const Tensor& values, const NormalizationRecord& record) {
    if (values.ndim() != 2 || values.dim(1) != record.min.size())
        throw ShapeError("denormalize: values " + values.shape_str() + " vs record for " +
                         std::to_string(record.min.size()) + " variables");
    Tensor out = values;
    const std::size_t M = out.dim(0), D = out.dim(1);
    for (std::size_t c = 0; c < D; ++c) {
        const double range = record.max[c] - record.min[c];
        for (std::size_t r = 0; r < M; ++r) {
            double& v = out.at(r, c);
            v = record.min[c] + v * range;
        }
    }
    return out;
}

std::pair<Tensor, Tensor> split(const Trace& trace) {
    if (trace.run_count != 3)
        throw DataError("split: expected a 3-run trace, got " +
                        std::to_string(trace.run_count) + " runs");
    const std::size_t N = trace.run_length;
    const std::size_t D = trace.variables();
    const double* src = trace.values.data();

    Tensor train({2 * N, D});
    Tensor test({N, D});
    std::copy(src, src + 2 * N * D, train.data());
    std::copy(src + 2 * N * D, src + 3 * N * D, test.data());
    return {std::move(train), std::move(test)};
}

WindowBatch windowize(const Tensor& rows, std::size_t lookback, std::size_t horizon) {
    if (rows.ndim() != 2)
        throw ShapeError("windowize: expected a row matrix, got " + rows.shape_str());
    if (lookback == 0 || horizon == 0)
        throw DataError("windowize: lookback and horizon must be positive");
    const std::size_t M = rows.dim(0);
    const std::size_t D = rows.dim(1);
    if (M < lookback + horizon)
        throw DataError("windowize: " + std::to_string(M) +
                        " rows cannot fit lookback " + std::to_string(lookback) +
                        " plus horizon " + std::to_string(horizon));

    const std::size_t B = M - lookback - horizon + 1;
    WindowBatch batch;
    batch.inputs = Tensor({B, D, lookback});
    batch.targets = Tensor({B, D, horizon});
    batch.origins.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t t = lookback + b;
        batch.origins[b] = t;
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t l = 0; l < lookback; ++l)
                batch.inputs.at(b, d, l) = rows.at(t - lookback + l, d);
            for (std::size_t h = 0; h < horizon; ++h)
                batch.targets.at(b, d, h) = rows.at(t + h, d);
        }
    }
    return batch;
}

std::pair<WindowBatch, WindowBatch> validation_sample(const WindowBatch& batch,
                                                      double fraction,
                                                      std::uint64_t seed) {
    const std::size_t B = batch.count();
    if (B == 0)
        throw DataError("validation_sample: empty window batch");
    const std::size_t k = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(B)));
    if (k > B)
        throw DataError("validation_sample: fraction " + std::to_string(fraction) +
                        " exceeds 1");

    // Partial Fisher-Yates: the first k slots end up holding the sample.
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(B);
    for (std::size_t i = 0; i < B; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, B - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + k);
    std::vector<std::size_t> train_idx(idx.begin() + k, idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    const std::size_t D = batch.inputs.dim(1);
    const std::size_t L = batch.lookback();
    const std::size_t H = batch.horizon();
    auto take = [&](const std::vector<std::size_t>& which) {
        WindowBatch out;
        out.inputs = Tensor({which.size(), D, L});
        out.targets = Tensor({which.size(), D, H});
        out.origins.resize(which.size());
        for (std::size_t i = 0; i < which.size(); ++i) {
            const std::size_t b = which[i];
            out.origins[i] = batch.origins[b];
            std::copy(batch.inputs.data() + b * D * L,
                      batch.inputs.data() + (b + 1) * D * L,
                      out.inputs.data() + i * D * L);
            std::copy(batch.targets.data() + b * D * H,
                      batch.targets.data() + (b + 1) * D * H,
                      out.targets.data() + i * D * H);
        }
        return out;
    };
    return {take(train_idx), take(val_idx)};
}

} // namespace tracecast
