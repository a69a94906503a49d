#include "tracecast/harness.hpp"

#include "tracecast/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <utility>

namespace fs = std::filesystem;

namespace tracecast {

namespace {

constexpr double kValidationFraction = 0.10;

std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
    if (!f) throw DataError("write failed for " + path);
}

bool nbeats_matches(const NBeatsModel& model, const NBeatsConfig& want,
                    std::uint64_t want_seed) {
    const NBeatsConfig& c = model.config;
    return model.seed == want_seed && c.num_stacks == want.num_stacks &&
           c.blocks_per_stack == want.blocks_per_stack && c.basis_dim == want.basis_dim &&
           c.hidden_width == want.hidden_width && c.lookback == want.lookback &&
           c.horizon == want.horizon;
}

bool graph_matches(const GraphModel& model, const GraphConfig& want,
                   std::uint64_t want_seed) {
    const GraphConfig& c = model.config;
    return model.seed == want_seed && c.embed_dim == want.embed_dim &&
           c.top_k == want.top_k && c.lookback == want.lookback &&
           c.horizon == want.horizon && c.node_count == want.node_count &&
           c.input_bias == want.input_bias && c.leaky_slope == want.leaky_slope;
}

nlohmann::json row_to_json(const ResultRow& r) {
    nlohmann::json j;
    j["dataset"] = r.dataset;
    j["model"] = r.model;
    j["lookback"] = r.lookback;
    j["horizon"] = r.horizon;
    j["top_k"] = r.top_k;
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["f1"] = r.f1;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["test_mse"] = r.test_mse;
    j["param_count"] = r.param_count;
    j["train_wall_s"] = r.train_wall_s;
    j["test_wall_s"] = r.test_wall_s;
    j["trained"] = r.trained;
    return j;
}

struct CellContext {
    const ExperimentPlan& plan;
    const DatasetPlan& dataset;
    const LabeledTrace& labeled;
    const Tensor& train_rows;
    const Tensor& test_rows;
    const std::vector<char>& labels;
    SweepMode mode = SweepMode::Full;
};

/// Detection bundle, per-cell result.json and the filled result row for one
/// trained (or cache-loaded) forecaster.
void finish_cell(const CellContext& ctx, const ForecastFn& fn, const SensorGraph* graph,
                 std::size_t lookback, std::size_t horizon, ResultRow& row) {
    auto t0 = std::chrono::steady_clock::now();

    WindowBatch test_w = windowize(ctx.test_rows, lookback, horizon);
    Tensor test_fore = fn(test_w.inputs);
    row.test_mse = mse_loss(test_fore, test_w.targets);

    AggregatedForecast test_agg = aggregate(make_forecast_set(test_w.origins, test_fore));
    AggregatedForecast ref_agg =
        reference_forecast(fn, ctx.train_rows, ctx.labeled.trace.run_length,
                           lookback, horizon);

    DetectionReport report;
    report.top_b = ctx.plan.detection.top_b;
    report.threshold = ctx.plan.detection.threshold;
    report.rows = score(test_agg, ref_agg, report.top_b, report.threshold);
    report.metrics = evaluate(report.rows, ctx.labels);

    row.f1 = report.metrics.f1;
    row.precision = report.metrics.precision;
    row.recall = report.metrics.recall;
    row.test_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.ok = true;

    std::string dir = cell_dir(ctx.plan.out_dir, ctx.dataset.name, row.model,
                               lookback, horizon, row.top_k);
    fs::create_directories(dir);
    write_report_csv(report, ctx.labeled.trace.variable_names, dir + "/report.csv");
    write_summary_json(report, lookback, horizon, dir + "/summary.json");
    write_plot_data(test_agg, ref_agg, ctx.test_rows, report,
                    ctx.labeled.trace.variable_names, dir);
    if (graph != nullptr)
        export_adjacency_csv(*graph, ctx.labeled.trace.variable_names,
                             dir + "/adjacency.csv");
    write_text_file(dir + "/result.json", row_to_json(row).dump(2) + "\n");
}

ResultRow run_nbeats_cell(const CellContext& ctx, std::size_t lookback,
                          std::size_t horizon, const WindowBatch& train,
                          const WindowBatch& val) {
    ResultRow row;
    row.dataset = ctx.dataset.name;
    row.model = "nbeats";
    row.lookback = lookback;
    row.horizon = horizon;

    NBeatsConfig cfg = ctx.plan.model.nbeats;
    cfg.lookback = lookback;
    cfg.horizon = horizon;

    const auto& names = ctx.labeled.trace.variable_names;
    row.param_count = nbeats_parameter_count(cfg) * names.size();

    auto t0 = std::chrono::steady_clock::now();
    std::vector<NBeatsModel> models;
    bool cached = true;
    for (std::size_t d = 0; d < names.size(); ++d) {
        std::string path = nbeats_checkpoint_path(ctx.plan.out_dir, ctx.dataset.name,
                                                  lookback, horizon, names[d]);
        if (!fs::exists(path)) {
            cached = false;
            break;
        }
        NBeatsModel m = nbeats_from_checkpoint(load_checkpoint(path));
        if (!nbeats_matches(m, cfg, ctx.plan.seed + d)) {
            cached = false;
            break;
        }
        models.push_back(std::move(m));
    }
    if (!cached) {
        PerVariableTraining trained =
            train_per_variable(train, val, names, cfg, ctx.plan.training, ctx.plan.seed);
        models = std::move(trained.models);
        for (std::size_t d = 0; d < names.size(); ++d) {
            std::string path = nbeats_checkpoint_path(ctx.plan.out_dir, ctx.dataset.name,
                                                      lookback, horizon, names[d]);
            fs::create_directories(fs::path(path).parent_path());
            save_checkpoint(to_checkpoint(models[d]), path);
        }
        row.trained = true;
    }
    row.train_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (ctx.mode == SweepMode::TrainOnly) {
        row.ok = true;
        return row;
    }
    ForecastFn fn = [&models, horizon](const Tensor& x) {
        std::size_t b_count = x.dim(0);
        std::size_t d_count = x.dim(1);
        Tensor out({b_count, d_count, horizon});
        for (std::size_t d = 0; d < d_count; ++d) {
            auto [fore, residual] = nbeats_predict(models[d], select_variable(x, d));
            (void)residual;
            for (std::size_t b = 0; b < b_count; ++b)
                for (std::size_t h = 0; h < horizon; ++h)
                    out.at(b, d, h) = fore.at(b, h);
        }
        return out;
    };
    finish_cell(ctx, fn, nullptr, lookback, horizon, row);
    return row;
}

ResultRow run_gnn_cell(const CellContext& ctx, std::size_t lookback, std::size_t horizon,
                       std::size_t top_k, const WindowBatch& train,
                       const WindowBatch& val) {
    ResultRow row;
    row.dataset = ctx.dataset.name;
    row.model = "gnn";
    row.lookback = lookback;
    row.horizon = horizon;
    row.top_k = top_k;

    GraphConfig cfg = ctx.plan.model.graph;
    cfg.lookback = lookback;
    cfg.horizon = horizon;
    cfg.node_count = ctx.labeled.trace.variables();
    cfg.top_k = top_k;
    row.param_count = graph_parameter_count(cfg);

    auto t0 = std::chrono::steady_clock::now();
    std::string path = gnn_checkpoint_path(ctx.plan.out_dir, ctx.dataset.name, lookback,
                                           horizon, top_k);
    GraphModel model;
    SensorGraph graph;
    bool cached = false;
    if (fs::exists(path)) {
        GraphModel loaded = graph_from_checkpoint(load_checkpoint(path));
        if (graph_matches(loaded, cfg, ctx.plan.seed)) {
            model = std::move(loaded);
            graph = derive_graph(model);
            cached = true;
        }
    }
    if (!cached) {
        GraphTraining trained = train_graph(train, val, cfg, ctx.plan.training,
                                            ctx.plan.seed);
        model = std::move(trained.model);
        graph = std::move(trained.graph);
        fs::create_directories(fs::path(path).parent_path());
        save_checkpoint(to_checkpoint(model, graph), path);
        row.trained = true;
    }
    row.train_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (ctx.mode == SweepMode::TrainOnly) {
        row.ok = true;
        return row;
    }
    ForecastFn fn = [&model, &graph](const Tensor& x) {
        return graph_predict(model, graph.adjacency, x);
    };
    finish_cell(ctx, fn, &graph, lookback, horizon, row);
    return row;
}

} // namespace

ExperimentPlan plan_from_config(const RunConfig& config) {
    ExperimentPlan plan;
    plan.datasets.push_back({config.dataset_name, config.recipe, config.anomalies});
    plan.model = config.model;
    plan.windows = config.windows;
    plan.top_k_list = config.model.top_k_list;
    plan.training = config.training;
    plan.detection = config.detection;
    plan.seed = config.seed;
    plan.out_dir = config.out_dir;
    return plan;
}

LabeledTrace prepare_dataset(const DatasetPlan& plan) {
    Trace raw = generate(plan.recipe);
    // Normalization statistics come from the training rows only; the test
    // run is transformed with them but never influences them.
    std::size_t fit_rows = raw.run_count > 1 ? (raw.run_count - 1) * raw.run_length
                                             : raw.run_length;
    auto [normalized, record] = fit_normalize(raw, fit_rows);
    (void)record;
    LabeledTrace labeled = make_labeled(std::move(normalized));
    for (const AnomalySpec& spec : plan.anomalies)
        labeled = inject(labeled, spec, plan.recipe);
    return labeled;
}

void write_dataset_files(const LabeledTrace& labeled, const std::string& dir) {
    fs::create_directories(dir);
    save_trace(labeled.trace, dir + "/trace.csv");

    Trace label_trace;
    label_trace.values = labeled.labels;
    label_trace.variable_names = labeled.trace.variable_names;
    label_trace.sample_interval_s = labeled.trace.sample_interval_s;
    label_trace.run_length = labeled.trace.run_length;
    label_trace.run_count = labeled.trace.run_count;
    save_trace(label_trace, dir + "/labels.csv");

    DatasetDescriptor d = describe(labeled);
    nlohmann::json j;
    j["variables"] = d.variable_count;
    j["attacked"] = d.attacked_count;
    j["categories"] = d.categories;
    j["anomaly_ratio"] = d.anomaly_ratio;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, ratio] : d.per_variable) per[name] = ratio;
    j["per_variable"] = per;
    write_text_file(dir + "/descriptor.json", j.dump(2) + "\n");
}

std::vector<char> global_test_labels(const LabeledTrace& labeled) {
    std::size_t n = labeled.trace.run_length;
    std::size_t d_count = labeled.trace.variables();
    std::size_t base = (labeled.trace.run_count - 1) * n;
    std::vector<char> out(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < d_count; ++d)
            if (labeled.labels.at(base + i, d) != 0.0) {
                out[i] = 1;
                break;
            }
    return out;
}

std::string nbeats_checkpoint_path(const std::string& out_dir, const std::string& dataset,
                                   std::size_t lookback, std::size_t horizon,
                                   const std::string& variable) {
    return out_dir + "/models/" + std::to_string(lookback) + "x" +
           std::to_string(horizon) + "/" + dataset + "/" + variable + ".nbeats";
}

std::string gnn_checkpoint_path(const std::string& out_dir, const std::string& dataset,
                                std::size_t lookback, std::size_t horizon,
                                std::size_t top_k) {
    return out_dir + "/models/" + std::to_string(lookback) + "x" +
           std::to_string(horizon) + "/k" + std::to_string(top_k) + "/" + dataset +
           ".gnn";
}

std::string cell_dir(const std::string& out_dir, const std::string& dataset,
                     const std::string& model, std::size_t lookback, std::size_t horizon,
                     std::size_t top_k) {
    std::string dir = out_dir + "/" + dataset + "/" + model + "/" +
                      std::to_string(lookback) + "x" + std::to_string(horizon);
    if (top_k > 0) dir += "/k" + std::to_string(top_k);
    return dir;
}

SweepOutcome run_sweep(const ExperimentPlan& plan, SweepMode mode,
                       const std::function<void(const ResultRow&)>& on_cell) {
    if (plan.datasets.empty()) throw ConfigError("experiment plan has no datasets");
    if (plan.windows.empty()) throw ConfigError("experiment plan has no windows");
    if (plan.model.kind != "nbeats" && plan.model.kind != "gnn")
        throw ConfigError("unknown model kind \"" + plan.model.kind + "\"");
    const auto& grid = supported_windows();
    for (const auto& w : plan.windows)
        if (std::find(grid.begin(), grid.end(), w) == grid.end())
            throw ConfigError("unsupported window " + std::to_string(w.first) + "x" +
                              std::to_string(w.second));
    if (plan.model.kind == "gnn" && plan.top_k_list.empty())
        throw ConfigError("gnn plan has an empty top_k list");

    fs::create_directories(plan.out_dir);
    SweepOutcome outcome;

    auto emit = [&outcome, &plan, mode, &on_cell](ResultRow row) {
        if (!row.ok) ++outcome.failed_cells;
        else if (row.trained) ++outcome.trained_cells;
        else ++outcome.loaded_cells;
        outcome.table.rows.push_back(std::move(row));
        if (mode == SweepMode::Full) {
            // Rewritten after every cell so an interrupted sweep leaves a
            // usable table behind.
            write_results_csv(outcome.table, plan.out_dir + "/results.csv");
            write_results_json(outcome.table, plan.out_dir + "/results.json");
        }
        if (on_cell) on_cell(outcome.table.rows.back());
    };

    auto fail_dataset = [&](const DatasetPlan& dsp, const std::string& why) {
        for (const auto& [lookback, horizon] : plan.windows) {
            if (plan.model.kind == "nbeats") {
                ResultRow row;
                row.dataset = dsp.name;
                row.model = "nbeats";
                row.lookback = lookback;
                row.horizon = horizon;
                row.error = why;
                emit(std::move(row));
            } else {
                for (std::size_t k : plan.top_k_list) {
                    ResultRow row;
                    row.dataset = dsp.name;
                    row.model = "gnn";
                    row.lookback = lookback;
                    row.horizon = horizon;
                    row.top_k = k;
                    row.error = why;
                    emit(std::move(row));
                }
            }
        }
    };

    for (const DatasetPlan& dsp : plan.datasets) {
        LabeledTrace labeled;
        Tensor train_rows, test_rows;
        std::vector<char> labels;
        try {
            labeled = prepare_dataset(dsp);
            write_dataset_files(labeled, plan.out_dir + "/" + dsp.name + "/data");
            std::tie(train_rows, test_rows) = split(labeled.trace);
            labels = global_test_labels(labeled);
        } catch (const std::exception& e) {
            fail_dataset(dsp, e.what());
            continue;
        }

        CellContext ctx{plan, dsp, labeled, train_rows, test_rows, labels, mode};
        for (const auto& [lookback, horizon] : plan.windows) {
            WindowBatch train, val;
            bool windows_ok = true;
            std::string window_error;
            try {
                // The two training runs are back-to-back in time, so the
                // training block is windowized as one contiguous series
                // (2N - L - H + 1 window pairs).
                WindowBatch all = windowize(train_rows, lookback, horizon);
                std::tie(train, val) =
                    validation_sample(all, kValidationFraction, plan.seed);
            } catch (const std::exception& e) {
                windows_ok = false;
                window_error = e.what();
            }

            if (plan.model.kind == "nbeats") {
                ResultRow row;
                if (!windows_ok) {
                    row.dataset = dsp.name;
                    row.model = "nbeats";
                    row.lookback = lookback;
                    row.horizon = horizon;
                    row.error = window_error;
                } else {
                    try {
                        row = run_nbeats_cell(ctx, lookback, horizon, train, val);
                    } catch (const std::exception& e) {
                        row = ResultRow{};
                        row.dataset = dsp.name;
                        row.model = "nbeats";
                        row.lookback = lookback;
                        row.horizon = horizon;
                        row.error = e.what();
                    }
                }
                emit(std::move(row));
            } else {
                for (std::size_t k : plan.top_k_list) {
                    ResultRow row;
                    if (!windows_ok) {
                        row.dataset = dsp.name;
                        row.model = "gnn";
                        row.lookback = lookback;
                        row.horizon = horizon;
                        row.top_k = k;
                        row.error = window_error;
                    } else {
                        try {
                            row = run_gnn_cell(ctx, lookback, horizon, k, train, val);
                        } catch (const std::exception& e) {
                            row = ResultRow{};
                            row.dataset = dsp.name;
                            row.model = "gnn";
                            row.lookback = lookback;
                            row.horizon = horizon;
                            row.top_k = k;
                            row.error = e.what();
                        }
                    }
                    emit(std::move(row));
                }
            }
        }
    }
    return outcome;
}

void write_results_csv(const ResultTable& table, const std::string& path) {
    std::string out =
        "dataset,model,lookback,horizon,top_k,ok,f1,precision,recall,test_mse,"
        "param_count,train_wall_s,test_wall_s,trained,error\n";
    for (const ResultRow& r : table.rows) {
        out += csv_escape(r.dataset) + "," + r.model + "," + std::to_string(r.lookback) +
               "," + std::to_string(r.horizon) + "," + std::to_string(r.top_k) + "," +
               (r.ok ? "1" : "0") + "," + fmt(r.f1) + "," + fmt(r.precision) + "," +
               fmt(r.recall) + "," + fmt(r.test_mse) + "," +
               std::to_string(r.param_count) + "," + fmt(r.train_wall_s) + "," +
               fmt(r.test_wall_s) + "," + (r.trained ? "1" : "0") + "," +
               csv_escape(r.error) + "\n";
    }
    write_text_file(path, out);
}

void write_results_json(const ResultTable& table, const std::string& path) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ResultRow& r : table.rows) rows.push_back(row_to_json(r));
    write_text_file(path, rows.dump(2) + "\n");
}

std::string stable_table_serialization(const ResultTable& table) {
    std::string out;
    for (const ResultRow& r : table.rows) {
        out += r.dataset + "|" + r.model + "|" + std::to_string(r.lookback) + "x" +
               std::to_string(r.horizon) + "|k" + std::to_string(r.top_k) + "|" +
               (r.ok ? "ok" : "failed") + "|" + fmt(r.f1) + "|" + fmt(r.precision) +
               "|" + fmt(r.recall) + "|" + fmt(r.test_mse) + "|" +
               std::to_string(r.param_count) + "|" + r.error + "\n";
    }
    return out;
}

std::vector<AblationRow> ablation_summary(const ResultTable& table) {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, AblationRow> groups;
    for (const ResultRow& r : table.rows) {
        if (r.model != "gnn" || !r.ok) continue;
        auto key = std::make_tuple(r.lookback, r.horizon, r.top_k);
        AblationRow& g = groups[key];
        g.lookback = r.lookback;
        g.horizon = r.horizon;
        g.top_k = r.top_k;
        g.mean_f1 += r.f1;
        g.mean_precision += r.precision;
        g.mean_recall += r.recall;
        g.mean_mse += r.test_mse;
        ++g.count;
    }
    std::vector<AblationRow> rows;
    for (auto& [key, g] : groups) {
        g.mean_f1 /= static_cast<double>(g.count);
        g.mean_precision /= static_cast<double>(g.count);
        g.mean_recall /= static_cast<double>(g.count);
        g.mean_mse /= static_cast<double>(g.count);
        rows.push_back(g);
    }
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::string out =
        "lookback,horizon,top_k,mean_f1,mean_precision,mean_recall,mean_mse,datasets\n";
    for (const AblationRow& r : rows) {
        out += std::to_string(r.lookback) + "," + std::to_string(r.horizon) + "," +
               std::to_string(r.top_k) + "," + fmt(r.mean_f1) + "," +
               fmt(r.mean_precision) + "," + fmt(r.mean_recall) + "," +
               fmt(r.mean_mse) + "," + std::to_string(r.count) + "\n";
    }
    write_text_file(path, out);
}

std::vector<std::string> ablation_discrepancies(const ResultTable& table) {
    std::vector<AblationRow> rows = ablation_summary(table);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<AblationRow>> by_window;
    for (const AblationRow& r : rows) by_window[{r.lookback, r.horizon}].push_back(r);

    std::vector<std::string> lines;
    for (const auto& [window, group] : by_window) {
        if (group.size() < 2) continue;
        const AblationRow* sparse = &group.front();
        const AblationRow* dense = &group.front();
        for (const AblationRow& r : group) {
            if (r.top_k < sparse->top_k) sparse = &r;
            if (r.top_k > dense->top_k) dense = &r;
        }
        // The sparsest graph is expected to generalize at least as well as
        // the densest one; anything else is worth a report line.
        if (sparse->mean_mse > dense->mean_mse) {
            lines.push_back("window " + std::to_string(window.first) + "x" +
                            std::to_string(window.second) + ": mean test MSE " +
                            fmt(sparse->mean_mse) + " at top_k=" +
                            std::to_string(sparse->top_k) + " exceeds " +
                            fmt(dense->mean_mse) + " at top_k=" +
                            std::to_string(dense->top_k));
        }
    }
    return lines;
}

std::vector<ComplexityRow> complexity_report(
    const std::vector<std::pair<std::size_t, std::size_t>>& windows,
    std::size_t variable_count, const ModelConfig& model) {
    std::vector<ComplexityRow> rows;
    for (const auto& [lookback, horizon] : windows) {
        NBeatsConfig ncfg = model.nbeats;
        ncfg.lookback = lookback;
        ncfg.horizon = horizon;
        GraphConfig gcfg = model.graph;
        gcfg.lookback = lookback;
        gcfg.horizon = horizon;
        gcfg.node_count = variable_count;

        ComplexityRow row;
        row.lookback = lookback;
        row.horizon = horizon;
        row.nbeats_per_variable = nbeats_parameter_count(ncfg);
        row.nbeats_total = row.nbeats_per_variable * variable_count;
        row.gnn_total = graph_parameter_count(gcfg);
        row.ratio = static_cast<double>(row.nbeats_per_variable) /
                    static_cast<double>(row.gnn_total);
        rows.push_back(row);
    }
    return rows;
}

void write_complexity_csv(const std::vector<ComplexityRow>& rows,
                          const std::string& path) {
    std::string out =
        "lookback,horizon,nbeats_per_variable,nbeats_total,gnn_total,ratio\n";
    for (const ComplexityRow& r : rows) {
        out += std::to_string(r.lookback) + "," + std::to_string(r.horizon) + "," +
               std::to_string(r.nbeats_per_variable) + "," +
               std::to_string(r.nbeats_total) + "," + std::to_string(r.gnn_total) +
               "," + fmt(r.ratio) + "\n";
    }
    write_text_file(path, out);
}

Metrics metrics_from_report_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw DataError(path + ": empty report");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    auto split = [](const std::string& line) {
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
    };

    std::vector<std::string> cols = split(header);
    std::size_t flag_col = cols.size(), label_col = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "flag") flag_col = i;
        if (cols[i] == "label") label_col = i;
    }
    if (flag_col == cols.size() || label_col == cols.size())
        throw DataError(path + ": report is missing the flag or label column");

    Metrics m;
    std::string line;
    std::size_t row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line);
        if (cells.size() != cols.size())
            throw DataError(path + ": row " + std::to_string(row_no) +
                            ": expected " + std::to_string(cols.size()) + " cells");
        bool flag = cells[flag_col] == "1";
        bool label = cells[label_col] == "1";
        if (flag && label) ++m.tp;
        else if (flag) ++m.fp;
        else if (label) ++m.fn;
        else ++m.tn;
    }
    m.precision = m.tp + m.fp == 0 ? 0.0
                                   : static_cast<double>(m.tp) /
                                         static_cast<double>(m.tp + m.fp);
    m.recall = m.tp + m.fn == 0
                   ? 0.0
                   : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    m.f1 = m.precision + m.recall == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

} // namespace tracecast
