// Command-line front end. Every subcommand reads one JSON run configuration
// and works out of its out_dir, so a full study is reproducible from the
// config file alone.

#include "tracecast/errors.hpp"
#include "tracecast/harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tracecast;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool full_grid = false;
    std::size_t workers = 1;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration JSON file")
        ->required();
    cmd->add_option("--seed", args.seed,
                    "Override the experiment seed (training init and shuffles)");
    cmd->add_option("--out", args.out, "Override the output directory");
    cmd->add_flag("--full-grid", args.full_grid,
                  "Use all six supported lookback/horizon pairs");
    cmd->add_option("--workers", args.workers, "Worker count hint for sweeps")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
}

RunConfig load_run_config(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.out_dir = *args.out;
    return cfg;
}

ExperimentPlan make_plan(const CommonArgs& args) {
    ExperimentPlan plan = plan_from_config(load_run_config(args));
    if (args.full_grid) plan.windows = supported_windows();
    plan.workers = args.workers;
    return plan;
}

std::string pretty(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string cell_tag(const ResultRow& r) {
    std::string tag = r.dataset + " " + r.model + " " + std::to_string(r.lookback) +
                      "x" + std::to_string(r.horizon);
    if (r.top_k > 0) tag += " k" + std::to_string(r.top_k);
    return tag;
}

void print_row(const ResultRow& r, bool train_only) {
    if (!r.ok) {
        std::cout << "[cell] " << cell_tag(r) << " FAILED: " << r.error << "\n";
        return;
    }
    std::cout << "[cell] " << cell_tag(r)
              << (r.trained ? " trained" : " cached");
    if (train_only) {
        std::cout << " (" << pretty(r.train_wall_s) << "s)\n";
        return;
    }
    std::cout << " f1=" << pretty(r.f1) << " precision=" << pretty(r.precision)
              << " recall=" << pretty(r.recall) << " mse=" << pretty(r.test_mse)
              << " (train " << pretty(r.train_wall_s) << "s, test "
              << pretty(r.test_wall_s) << "s)\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
}

// ---- single-cell model loading (forecast/detect work from checkpoints) ----

struct LoadedForecaster {
    ForecastFn fn;
    std::shared_ptr<SensorGraph> graph;  // gnn only
};

LoadedForecaster load_forecaster(const RunConfig& cfg, const LabeledTrace& labeled,
                                 std::size_t lookback, std::size_t horizon) {
    LoadedForecaster out;
    if (cfg.model.kind == "nbeats") {
        auto models = std::make_shared<std::vector<NBeatsModel>>();
        for (const std::string& var : labeled.trace.variable_names) {
            std::string path = nbeats_checkpoint_path(cfg.out_dir, cfg.dataset_name,
                                                      lookback, horizon, var);
            if (!fs::exists(path))
                throw DataError("missing checkpoint " + path +
                                "; run the train subcommand first");
            NBeatsModel m = nbeats_from_checkpoint(load_checkpoint(path));
            if (m.config.lookback != lookback || m.config.horizon != horizon)
                throw DataError("checkpoint " + path + " was built for window " +
                                std::to_string(m.config.lookback) + "x" +
                                std::to_string(m.config.horizon));
            models->push_back(std::move(m));
        }
        out.fn = [models, horizon](const Tensor& x) {
            std::size_t b_count = x.dim(0);
            std::size_t d_count = x.dim(1);
            Tensor fore({b_count, d_count, horizon});
            for (std::size_t d = 0; d < d_count; ++d) {
                auto [f, residual] = nbeats_predict((*models)[d], select_variable(x, d));
                (void)residual;
                for (std::size_t b = 0; b < b_count; ++b)
                    for (std::size_t h = 0; h < horizon; ++h)
                        fore.at(b, d, h) = f.at(b, h);
            }
            return fore;
        };
        return out;
    }

    std::string path = gnn_checkpoint_path(cfg.out_dir, cfg.dataset_name, lookback,
                                           horizon, cfg.model.graph.top_k);
    if (!fs::exists(path))
        throw DataError("missing checkpoint " + path +
                        "; run the train subcommand first");
    auto model = std::make_shared<GraphModel>(
        graph_from_checkpoint(load_checkpoint(path)));
    if (model->config.lookback != lookback || model->config.horizon != horizon)
        throw DataError("checkpoint " + path + " was built for window " +
                        std::to_string(model->config.lookback) + "x" +
                        std::to_string(model->config.horizon));
    out.graph = std::make_shared<SensorGraph>(derive_graph(*model));
    auto graph = out.graph;
    out.fn = [model, graph](const Tensor& x) {
        return graph_predict(*model, graph->adjacency, x);
    };
    return out;
}

struct CellForecasts {
    AggregatedForecast test;
    AggregatedForecast reference;
    std::shared_ptr<SensorGraph> graph;
};

CellForecasts forecast_cell(const RunConfig& cfg, const LabeledTrace& labeled,
                            const Tensor& train_rows, const Tensor& test_rows,
                            std::size_t lookback, std::size_t horizon) {
    LoadedForecaster loaded = load_forecaster(cfg, labeled, lookback, horizon);
    WindowBatch test_w = windowize(test_rows, lookback, horizon);
    CellForecasts out;
    out.test = aggregate(make_forecast_set(test_w.origins, loaded.fn(test_w.inputs)));
    out.reference = reference_forecast(loaded.fn, train_rows,
                                       labeled.trace.run_length, lookback, horizon);
    out.graph = loaded.graph;
    return out;
}

// ---- subcommands ----

int cmd_synth(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    Trace raw = generate(cfg.recipe);
    std::string dir = cfg.out_dir + "/" + cfg.dataset_name + "/data";
    fs::create_directories(dir);
    save_trace(raw, dir + "/trace_raw.csv");

    DatasetDescriptor d = describe(make_labeled(raw));
    nlohmann::json j;
    j["variables"] = d.variable_count;
    j["attacked"] = d.attacked_count;
    j["categories"] = d.categories;
    j["anomaly_ratio"] = d.anomaly_ratio;
    j["per_variable"] = nlohmann::json::object();
    write_text_file(dir + "/descriptor.json", j.dump(2) + "\n");

    if (!args.quiet)
        std::cout << "wrote " << raw.rows() << "x" << raw.variables()
                  << " trace to " << dir << "/trace_raw.csv\n";
    return 0;
}

int cmd_inject(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    LabeledTrace labeled =
        prepare_dataset({cfg.dataset_name, cfg.recipe, cfg.anomalies});
    std::string dir = cfg.out_dir + "/" + cfg.dataset_name + "/data";
    write_dataset_files(labeled, dir);
    if (!args.quiet) {
        DatasetDescriptor d = describe(labeled);
        std::cout << "wrote " << dir << "/trace.csv with " << d.attacked_count
                  << " attacked variable(s)";
        if (!d.categories.empty()) std::cout << " (" << d.categories << ")";
        std::cout << ", anomaly ratio " << pretty(d.anomaly_ratio) << "\n";
    }
    return 0;
}

int cmd_train(const CommonArgs& args) {
    ExperimentPlan plan = make_plan(args);
    std::function<void(const ResultRow&)> progress;
    if (!args.quiet) progress = [](const ResultRow& r) { print_row(r, true); };
    SweepOutcome outcome = run_sweep(plan, SweepMode::TrainOnly, progress);
    if (!args.quiet)
        std::cout << "trained " << outcome.trained_cells << ", reused "
                  << outcome.loaded_cells << ", failed " << outcome.failed_cells
                  << "\n";
    return outcome.failed_cells == 0 ? 0 : 2;
}

int run_full_sweep(ExperimentPlan plan, const CommonArgs& args, bool with_ablation) {
    std::function<void(const ResultRow&)> progress;
    if (!args.quiet) progress = [](const ResultRow& r) { print_row(r, false); };
    SweepOutcome outcome = run_sweep(plan, SweepMode::Full, progress);

    std::size_t variables = plan.datasets.front().recipe.variables.size();
    write_complexity_csv(complexity_report(plan.windows, variables, plan.model),
                         plan.out_dir + "/complexity.csv");

    if (with_ablation) {
        write_ablation_csv(ablation_summary(outcome.table),
                           plan.out_dir + "/ablation.csv");
        std::vector<std::string> lines = ablation_discrepancies(outcome.table);
        std::string report_path = plan.out_dir + "/ablation_discrepancies.txt";
        fs::remove(report_path);
        if (!lines.empty()) {
            std::string text;
            for (const std::string& l : lines) text += l + "\n";
            write_text_file(report_path, text);
            if (!args.quiet)
                std::cout << "ablation discrepancies written to " << report_path
                          << "\n";
        } else if (!args.quiet) {
            std::cout << "ablation MSE ordering holds for every window\n";
        }
    }

    if (!args.quiet)
        std::cout << "results in " << plan.out_dir << "/results.csv ("
                  << outcome.trained_cells << " trained, " << outcome.loaded_cells
                  << " cached, " << outcome.failed_cells << " failed)\n";
    return outcome.failed_cells == 0 ? 0 : 2;
}

int cmd_bench(const CommonArgs& args) {
    ExperimentPlan plan = make_plan(args);
    return run_full_sweep(std::move(plan), args, plan.model.kind == "gnn");
}

int cmd_ablate(const CommonArgs& args) {
    ExperimentPlan plan = make_plan(args);
    plan.model.kind = "gnn";
    return run_full_sweep(std::move(plan), args, true);
}

int cmd_complexity(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    auto windows = args.full_grid ? supported_windows() : cfg.windows;
    auto rows = complexity_report(windows, cfg.recipe.variables.size(), cfg.model);
    fs::create_directories(cfg.out_dir);
    write_complexity_csv(rows, cfg.out_dir + "/complexity.csv");
    if (!args.quiet) {
        std::cout << "window  nbeats/var  nbeats total  gnn total  ratio\n";
        for (const ComplexityRow& r : rows) {
            std::string window =
                std::to_string(r.lookback) + "x" + std::to_string(r.horizon);
            std::printf("%-7s %10zu %13zu %10zu  %.2f\n", window.c_str(),
                        r.nbeats_per_variable, r.nbeats_total, r.gnn_total, r.ratio);
        }
    }
    return 0;
}

int cmd_forecast(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    if (args.full_grid) cfg.windows = supported_windows();
    LabeledTrace labeled =
        prepare_dataset({cfg.dataset_name, cfg.recipe, cfg.anomalies});
    auto [train_rows, test_rows] = split(labeled.trace);

    for (const auto& [lookback, horizon] : cfg.windows) {
        CellForecasts fc =
            forecast_cell(cfg, labeled, train_rows, test_rows, lookback, horizon);
        std::size_t top_k = cfg.model.kind == "gnn" ? cfg.model.graph.top_k : 0;
        std::string dir = cell_dir(cfg.out_dir, cfg.dataset_name, cfg.model.kind,
                                   lookback, horizon, top_k);
        fs::create_directories(dir);

        const auto& names = labeled.trace.variable_names;
        std::string csv = "time";
        for (const std::string& n : names) csv += "," + n + "_test," + n + "_ref";
        csv += "\n";
        std::size_t rows = fc.test.estimates.dim(0);
        for (std::size_t r = 0; r < rows; ++r) {
            csv += std::to_string(fc.test.start + r);
            for (std::size_t d = 0; d < names.size(); ++d)
                csv += "," + pretty(fc.test.estimates.at(r, d)) + "," +
                       pretty(fc.reference.estimates.at(r, d));
            csv += "\n";
        }
        write_text_file(dir + "/estimates.csv", csv);
        if (!args.quiet)
            std::cout << "wrote " << dir << "/estimates.csv (" << rows
                      << " time points)\n";
    }
    return 0;
}

int cmd_detect(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    if (args.full_grid) cfg.windows = supported_windows();
    LabeledTrace labeled =
        prepare_dataset({cfg.dataset_name, cfg.recipe, cfg.anomalies});
    auto [train_rows, test_rows] = split(labeled.trace);
    std::vector<char> labels = global_test_labels(labeled);

    for (const auto& [lookback, horizon] : cfg.windows) {
        CellForecasts fc =
            forecast_cell(cfg, labeled, train_rows, test_rows, lookback, horizon);

        DetectionReport report;
        report.top_b = cfg.detection.top_b;
        report.threshold = cfg.detection.threshold;
        report.rows = score(fc.test, fc.reference, report.top_b, report.threshold);
        report.metrics = evaluate(report.rows, labels);

        std::size_t top_k = cfg.model.kind == "gnn" ? cfg.model.graph.top_k : 0;
        std::string dir = cell_dir(cfg.out_dir, cfg.dataset_name, cfg.model.kind,
                                   lookback, horizon, top_k);
        fs::create_directories(dir);
        write_report_csv(report, labeled.trace.variable_names, dir + "/report.csv");
        write_summary_json(report, lookback, horizon, dir + "/summary.json");
        write_plot_data(fc.test, fc.reference, test_rows, report,
                        labeled.trace.variable_names, dir);
        if (fc.graph)
            export_adjacency_csv(*fc.graph, labeled.trace.variable_names,
                                 dir + "/adjacency.csv");

        if (!args.quiet)
            std::cout << "[detect] " << cfg.dataset_name << " " << cfg.model.kind
                      << " " << lookback << "x" << horizon
                      << " f1=" << pretty(report.metrics.f1)
                      << " precision=" << pretty(report.metrics.precision)
                      << " recall=" << pretty(report.metrics.recall) << " ("
                      << report.rows.size() << " time points)\n";
    }
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    if (args.full_grid) cfg.windows = supported_windows();

    std::vector<std::size_t> ks = {0};
    if (cfg.model.kind == "gnn") ks = cfg.model.top_k_list;

    std::size_t found = 0;
    for (const auto& [lookback, horizon] : cfg.windows) {
        for (std::size_t k : ks) {
            std::string dir = cell_dir(cfg.out_dir, cfg.dataset_name, cfg.model.kind,
                                       lookback, horizon, k);
            std::string path = dir + "/report.csv";
            if (!fs::exists(path)) continue;
            Metrics m = metrics_from_report_csv(path);
            ++found;
            std::cout << "[eval] " << cfg.dataset_name << " " << cfg.model.kind << " "
                      << lookback << "x" << horizon
                      << (k > 0 ? " k" + std::to_string(k) : "")
                      << " f1=" << pretty(m.f1) << " precision=" << pretty(m.precision)
                      << " recall=" << pretty(m.recall) << " tp=" << m.tp
                      << " fp=" << m.fp << " fn=" << m.fn << " tn=" << m.tn << "\n";
        }
    }
    if (found == 0)
        throw DataError("no report.csv found under " + cfg.out_dir + "/" +
                        cfg.dataset_name + "; run detect or bench first");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast-based anomaly prediction for multivariate sensor traces"};
    app.require_subcommand(1);

    CommonArgs args;
    int rc = 0;

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const CommonArgs&);
    };
    const Sub subs[] = {
        {"synth", "Generate the raw synthetic trace and its descriptor", cmd_synth},
        {"inject", "Generate, normalize and inject anomalies into the test run",
         cmd_inject},
        {"train", "Train (or reuse) checkpoints for every configured cell",
         cmd_train},
        {"forecast", "Write test and reference forecasts from existing checkpoints",
         cmd_forecast},
        {"detect", "Score the test run against the reference and write reports",
         cmd_detect},
        {"eval", "Recompute metrics from previously written reports", cmd_eval},
        {"bench", "Full sweep: train, detect and tabulate every cell", cmd_bench},
        {"ablate", "Graph model sweep across the configured top-k list", cmd_ablate},
        {"complexity", "Tabulate parameter counts per window", cmd_complexity},
    };
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, args);
        auto fn = s.fn;
        cmd->callback([&args, &rc, fn]() { rc = fn(args); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        // DataError, ShapeError, filesystem and I/O failures.
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
