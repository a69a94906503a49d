#include "tracecast/detector.hpp"

#include "tracecast/dataset.hpp"
#include "tracecast/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace tracecast {

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void write_file(const std::string& content, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open file for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f)
        throw DataError("write failed: " + path);
}

} // namespace

ForecastSet make_forecast_set(const std::vector<std::size_t>& origins,
                              const Tensor& forecasts) {
    if (forecasts.ndim() != 3 || forecasts.dim(0) != origins.size())
        throw ShapeError("make_forecast_set: " + std::to_string(origins.size()) +
                         " origins vs forecasts " + forecasts.shape_str());
    ForecastSet fs;
    fs.variable_count = forecasts.dim(1);
    fs.horizon = forecasts.dim(2);
    fs.origins = origins;
    fs.forecasts.reserve(origins.size());
    const std::size_t block = fs.variable_count * fs.horizon;
    for (std::size_t b = 0; b < origins.size(); ++b) {
        Tensor m({fs.variable_count, fs.horizon});
        std::copy(forecasts.data() + b * block, forecasts.data() + (b + 1) * block,
                  m.data());
        fs.forecasts.push_back(std::move(m));
    }
    return fs;
}

AggregatedForecast aggregate(const ForecastSet& fs) {
    if (fs.origins.empty())
        throw DataError("aggregate: empty forecast set");
    if (fs.forecasts.size() != fs.origins.size())
        throw ShapeError("aggregate: " + std::to_string(fs.origins.size()) +
                         " origins vs " + std::to_string(fs.forecasts.size()) +
                         " forecast matrices");

    const std::size_t D = fs.variable_count;
    const std::size_t H = fs.horizon;
    const std::size_t first = fs.origins.front();
    const std::size_t last = fs.origins.back() + H;  // one past the end

    AggregatedForecast agg;
    agg.start = first;
    agg.estimates = Tensor({last - first, D});
    agg.coverage.assign(last - first, 0);

    // Streaming accumulation: forecasts arrive origin by origin; sums build
    // up in place and one division at the end turns them into means.
    for (std::size_t k = 0; k < fs.origins.size(); ++k) {
        const Tensor& m = fs.forecasts[k];
        if (m.dim(0) != D || m.dim(1) != H)
            throw ShapeError("aggregate: forecast " + std::to_string(k) + " has shape " +
                             m.shape_str());
        const std::size_t base = fs.origins[k] - first;
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t d = 0; d < D; ++d)
                agg.estimates.at(base + h, d) += m.at(d, h);
            agg.coverage[base + h] += 1;
        }
    }
    for (std::size_t r = 0; r < agg.coverage.size(); ++r) {
        if (agg.coverage[r] == 0)
            throw DataError("aggregate: gap in coverage at time " +
                            std::to_string(first + r));
        for (std::size_t d = 0; d < D; ++d)
            agg.estimates.at(r, d) /= static_cast<double>(agg.coverage[r]);
    }
    return agg;
}

AggregatedForecast reference_forecast(const ForecastFn& model, const Tensor& train_rows,
                                      std::size_t run_length, std::size_t lookback,
                                      std::size_t horizon) {
    if (train_rows.ndim() != 2 || train_rows.dim(0) != 2 * run_length)
        throw ShapeError("reference_forecast: expected 2 runs of " +
                         std::to_string(run_length) + " rows, got " +
                         train_rows.shape_str());
    const std::size_t D = train_rows.dim(1);

    AggregatedForecast per_run[2];
    for (std::size_t r = 0; r < 2; ++r) {
        Tensor run({run_length, D});
        std::copy(train_rows.data() + r * run_length * D,
                  train_rows.data() + (r + 1) * run_length * D, run.data());
        const WindowBatch windows = windowize(run, lookback, horizon);
        per_run[r] = aggregate(make_forecast_set(windows.origins, model(windows.inputs)));
    }

    if (per_run[0].start != per_run[1].start ||
        !per_run[0].estimates.same_shape(per_run[1].estimates))
        throw ShapeError("reference_forecast: training runs produced misaligned estimates");

    AggregatedForecast out = per_run[0];
    for (std::size_t i = 0; i < out.estimates.size(); ++i)
        out.estimates.data()[i] =
            (per_run[0].estimates.data()[i] + per_run[1].estimates.data()[i]) / 2.0;
    return out;
}

std::vector<DetectionRow> score(const AggregatedForecast& test,
                                const AggregatedForecast& reference,
                                std::size_t top_b, double threshold) {
    if (test.start != reference.start || !test.estimates.same_shape(reference.estimates))
        throw ShapeError("score: test estimates " + test.estimates.shape_str() +
                         " at " + std::to_string(test.start) +
                         " misaligned with reference " +
                         reference.estimates.shape_str() + " at " +
                         std::to_string(reference.start));
    const std::size_t T = test.estimates.dim(0);
    const std::size_t D = test.estimates.dim(1);
    if (top_b == 0 || top_b > D)
        throw ConfigError("score: top_b " + std::to_string(top_b) + " outside 1.." +
                          std::to_string(D));

    std::vector<DetectionRow> rows(T);
    std::vector<double> sorted(D);
    for (std::size_t t = 0; t < T; ++t) {
        DetectionRow& row = rows[t];
        row.time = test.start + t;
        row.deviations.resize(D);
        for (std::size_t d = 0; d < D; ++d) {
            row.deviations[d] =
                std::fabs(test.estimates.at(t, d) - reference.estimates.at(t, d));
            if (row.deviations[d] > row.deviations[row.argmax_variable])
                row.argmax_variable = d;
        }
        sorted = row.deviations;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        double s = 0.0;
        for (std::size_t i = 0; i < top_b; ++i) s += sorted[i];
        row.score = s / static_cast<double>(top_b);
        row.flag = row.score > threshold;
    }
    return rows;
}

Metrics evaluate(std::vector<DetectionRow>& rows, const std::vector<char>& labels) {
    Metrics m;
    for (DetectionRow& row : rows) {
        if (row.time >= labels.size())
            throw ShapeError("evaluate: row time " + std::to_string(row.time) +
                             " beyond " + std::to_string(labels.size()) + " labels");
        row.label = labels[row.time] != 0;
        if (row.flag && row.label) ++m.tp;
        else if (row.flag && !row.label) ++m.fp;
        else if (!row.flag && row.label) ++m.fn;
        else ++m.tn;
    }
    m.precision = m.tp + m.fp > 0
                      ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                      : 0.0;
    m.recall = m.tp + m.fn > 0
                   ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                   : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

double mse_loss(const Tensor& forecasts, const Tensor& targets) {
    if (!forecasts.same_shape(targets))
        throw ShapeError("mse_loss: " + forecasts.shape_str() + " vs " +
                         targets.shape_str());
    if (forecasts.ndim() == 0 || forecasts.dim(0) == 0)
        throw DataError("mse_loss: empty batch");
    const std::size_t B = forecasts.dim(0);
    double acc = 0.0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const double e = forecasts.data()[i] - targets.data()[i];
        acc += e * e;
    }
    return acc / static_cast<double>(B);
}

void write_report_csv(const DetectionReport& report,
                      const std::vector<std::string>& variable_names,
                      const std::string& path) {
    std::string out = "time,score,flag,label,argmax_variable";
    for (const std::string& name : variable_names) {
        out += ",dev_";
        out += name;
    }
    out += '\n';
    for (const DetectionRow& row : report.rows) {
        if (row.deviations.size() != variable_names.size())
            throw ShapeError("write_report_csv: row has " +
                             std::to_string(row.deviations.size()) + " deviations for " +
                             std::to_string(variable_names.size()) + " variables");
        out += std::to_string(row.time);
        out += ',';
        append_number(out, row.score);
        out += row.flag ? ",1," : ",0,";
        out += row.label ? '1' : '0';
        out += ',';
        out += variable_names[row.argmax_variable];
        for (double dev : row.deviations) {
            out += ',';
            append_number(out, dev);
        }
        out += '\n';
    }
    write_file(out, path);
}

void write_summary_json(const DetectionReport& report, std::size_t lookback,
                        std::size_t horizon, const std::string& path) {
    nlohmann::json j;
    j["precision"] = report.metrics.precision;
    j["recall"] = report.metrics.recall;
    j["f1"] = report.metrics.f1;
    j["tp"] = report.metrics.tp;
    j["fp"] = report.metrics.fp;
    j["fn"] = report.metrics.fn;
    j["tn"] = report.metrics.tn;
    j["top_b"] = report.top_b;
    j["threshold"] = report.threshold;
    j["lookback"] = lookback;
    j["horizon"] = horizon;
    j["scored_points"] = report.rows.size();
    // Boundary points with fewer than H forecasts still count toward the
    // metrics; their estimate averages whatever leads exist.
    j["partial_coverage"] = "included";
    write_file(j.dump(2) + "\n", path);
}

void write_plot_data(const AggregatedForecast& test, const AggregatedForecast& reference,
                     const Tensor& truth_rows, const DetectionReport& report,
                     const std::vector<std::string>& variable_names,
                     const std::string& dir) {
    const std::size_t T = test.estimates.dim(0);
    const std::size_t D = test.estimates.dim(1);
    if (variable_names.size() != D)
        throw ShapeError("write_plot_data: " + std::to_string(variable_names.size()) +
                         " names for " + std::to_string(D) + " variables");
    if (report.rows.size() != T)
        throw ShapeError("write_plot_data: " + std::to_string(report.rows.size()) +
                         " report rows for " + std::to_string(T) + " estimates");

    for (std::size_t d = 0; d < D; ++d) {
        std::string out = "time,truth,test_forecast,reference_forecast,flag\n";
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t abs_t = test.start + t;
            out += std::to_string(abs_t);
            out += ',';
            append_number(out, truth_rows.at(abs_t, d));
            out += ',';
            append_number(out, test.estimates.at(t, d));
            out += ',';
            append_number(out, reference.estimates.at(t, d));
            out += report.rows[t].flag ? ",1\n" : ",0\n";
        }
        write_file(out, dir + "/plot_" + variable_names[d] + ".csv");
    }

    std::string spans = "start,end\n";
    std::size_t t = 0;
    while (t < T) {
        if (!report.rows[t].flag) {
            ++t;
            continue;
        }
        const std::size_t begin = report.rows[t].time;
        while (t < T && report.rows[t].flag) ++t;
        const std::size_t end = report.rows[t - 1].time + 1;
        spans += std::to_string(begin);
        spans += ',';
        spans += std::to_string(end);
        spans += '\n';
    }
    write_file(spans, dir + "/flag_spans.csv");
}

} // namespace tracecast
