#include "tracecast/run_config.hpp"

#include "tracecast/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace tracecast {

using nlohmann::json;

namespace {

/// Collects every violation with its JSON-path locator; callers throw one
/// ConfigError at the end so a config is never accepted piecemeal.
struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) {
        errors.push_back(path + ": " + msg);
    }

    void check_keys(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : obj.items()) {
            bool known = false;
            for (const char* a : allowed)
                if (key == a) known = true;
            if (!known) fail(path + "." + key, "unknown key");
        }
    }

    std::size_t get_size(const json& obj, const std::string& path, const char* key,
                         std::size_t fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number_unsigned()) {
            fail(path + "." + key, "expected a non-negative integer");
            return fallback;
        }
        return v.get<std::size_t>();
    }

    double get_double(const json& obj, const std::string& path, const char* key,
                      double fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback;
        }
        return v.get<double>();
    }

    bool get_bool(const json& obj, const std::string& path, const char* key,
                  bool fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_boolean()) {
            fail(path + "." + key, "expected true or false");
            return fallback;
        }
        return v.get<bool>();
    }

    std::string get_string(const json& obj, const std::string& path, const char* key,
                           std::string fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback;
        }
        return v.get<std::string>();
    }
};

SignalClass parse_class(const std::string& s, const std::string& path, Validator& v) {
    if (s == "step_like") return SignalClass::StepLike;
    if (s == "smooth_noisy") return SignalClass::SmoothNoisy;
    if (s == "idle") return SignalClass::Idle;
    v.fail(path, "unknown signal class \"" + s +
                     "\" (expected step_like, smooth_noisy or idle)");
    return SignalClass::StepLike;
}

void parse_variables(const json& ds, const std::string& path, Validator& v,
                     RecipeSpec& recipe) {
    const bool has_list = ds.contains("variables");
    const bool has_mix = ds.contains("mix");
    if (has_list == has_mix) {
        v.fail(path, "provide exactly one of \"variables\" or \"mix\"");
        return;
    }

    if (has_list) {
        const json& vars = ds.at("variables");
        if (!vars.is_array() || vars.empty()) {
            v.fail(path + ".variables", "expected a non-empty array");
            return;
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const std::string vpath = path + ".variables[" + std::to_string(i) + "]";
            const json& var = vars[i];
            if (!var.is_object()) {
                v.fail(vpath, "expected an object");
                continue;
            }
            v.check_keys(var, vpath, {"name", "class"});
            VariableSpec spec;
            spec.name = v.get_string(var, vpath, "name", "");
            if (spec.name.empty()) v.fail(vpath + ".name", "required");
            spec.signal_class = parse_class(v.get_string(var, vpath, "class", "step_like"),
                                            vpath + ".class", v);
            recipe.variables.push_back(std::move(spec));
        }
        return;
    }

    const json& mix = ds.at("mix");
    if (!mix.is_object()) {
        v.fail(path + ".mix", "expected an object");
        return;
    }
    v.check_keys(mix, path + ".mix", {"step_like", "smooth_noisy", "idle"});
    const std::size_t steps = v.get_size(mix, path + ".mix", "step_like", 0);
    const std::size_t smooths = v.get_size(mix, path + ".mix", "smooth_noisy", 0);
    const std::size_t idles = v.get_size(mix, path + ".mix", "idle", 0);
    if (steps + smooths + idles == 0) {
        v.fail(path + ".mix", "at least one variable required");
        return;
    }
    for (std::size_t i = 0; i < steps; ++i)
        recipe.variables.push_back(
            {"step_" + std::to_string(i + 1), SignalClass::StepLike});
    for (std::size_t i = 0; i < smooths; ++i)
        recipe.variables.push_back(
            {"smooth_" + std::to_string(i + 1), SignalClass::SmoothNoisy});
    for (std::size_t i = 0; i < idles; ++i)
        recipe.variables.push_back({"idle_" + std::to_string(i + 1), SignalClass::Idle});
}

void parse_anomaly(const json& a, const std::string& path, Validator& v,
                   const RecipeSpec& recipe, std::vector<AnomalySpec>& out) {
    if (!a.is_object()) {
        v.fail(path, "expected an object");
        return;
    }
    v.check_keys(a, path,
                 {"variable", "category", "segment", "delta", "lag", "displacement",
                  "label_epsilon", "edge_threshold"});

    AnomalySpec spec;
    spec.target_variable = v.get_string(a, path, "variable", "");
    if (spec.target_variable.empty()) {
        v.fail(path + ".variable", "required");
    } else {
        const VariableSpec* var = nullptr;
        for (const VariableSpec& r : recipe.variables)
            if (r.name == spec.target_variable) var = &r;
        if (var == nullptr)
            v.fail(path + ".variable",
                   "no variable named \"" + spec.target_variable + "\" in the dataset");
        else if (var->signal_class != SignalClass::StepLike)
            v.fail(path + ".variable", "anomalies require a step_like variable; \"" +
                                           spec.target_variable + "\" is " +
                                           signal_class_name(var->signal_class));
    }

    const std::string category = v.get_string(a, path, "category", "");
    const bool has_delta = a.contains("delta");
    const bool has_lag = a.contains("lag");
    const bool has_disp = a.contains("displacement");
    if (category == "amplitude_shift") {
        spec.category = AnomalyCategory::AmplitudeShift;
        if (!has_delta || has_lag || has_disp)
            v.fail(path, "amplitude_shift takes \"delta\" and no other magnitude");
        spec.amplitude_delta = v.get_double(a, path, "delta", 0.0);
    } else if (category == "time_shift") {
        spec.category = AnomalyCategory::TimeShift;
        if (!has_lag || has_delta || has_disp)
            v.fail(path, "time_shift takes \"lag\" and no other magnitude");
        if (has_lag) {
            const json& lag = a.at("lag");
            if (!lag.is_number_integer())
                v.fail(path + ".lag", "expected an integer sample count");
            else
                spec.lag = lag.get<long>();
        }
    } else if (category == "step_shift") {
        spec.category = AnomalyCategory::StepShift;
        if (!has_disp || has_delta || has_lag)
            v.fail(path, "step_shift takes \"displacement\" and no other magnitude");
        if (has_disp) {
            const json& disp = a.at("displacement");
            if (!disp.is_number_integer())
                v.fail(path + ".displacement", "expected an integer sample count");
            else
                spec.edge_displacement = disp.get<long>();
        }
    } else {
        v.fail(path + ".category",
               "expected amplitude_shift, time_shift or step_shift, got \"" + category +
                   "\"");
    }

    if (!a.contains("segment")) {
        v.fail(path + ".segment", "required");
    } else {
        const json& seg = a.at("segment");
        if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number_unsigned() ||
            !seg[1].is_number_unsigned()) {
            v.fail(path + ".segment", "expected [begin, end] sample indices");
        } else {
            spec.segment_begin = seg[0].get<std::size_t>();
            spec.segment_end = seg[1].get<std::size_t>();
            if (spec.segment_begin >= spec.segment_end ||
                spec.segment_end > recipe.samples_per_run)
                v.fail(path + ".segment",
                       "[" + std::to_string(spec.segment_begin) + ", " +
                           std::to_string(spec.segment_end) +
                           ") is not a valid range within a run of " +
                           std::to_string(recipe.samples_per_run) + " samples");
        }
    }

    spec.label_epsilon = v.get_double(a, path, "label_epsilon", 1e-6);
    spec.edge_threshold = v.get_double(a, path, "edge_threshold", 0.1);
    out.push_back(std::move(spec));
}

} // namespace

const std::vector<std::pair<std::size_t, std::size_t>>& supported_windows() {
    static const std::vector<std::pair<std::size_t, std::size_t>> grid = {
        {10, 3}, {20, 5}, {50, 10}, {100, 20}, {200, 50}, {500, 100}};
    return grid;
}

RunConfig validate_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("$: config must be a JSON object");

    Validator v;
    RunConfig cfg;

    v.check_keys(doc, "$",
                 {"dataset", "model", "training", "detection", "windows", "seed",
                  "out_dir"});

    // dataset ---------------------------------------------------------------
    if (!doc.contains("dataset")) {
        v.fail("$.dataset", "required");
    } else if (!doc.at("dataset").is_object()) {
        v.fail("$.dataset", "expected an object");
    } else {
        const json& ds = doc.at("dataset");
        v.check_keys(ds, "$.dataset",
                     {"name", "seed", "samples_per_run", "run_count", "noise_sigma",
                      "jitter", "sample_interval_s", "variables", "mix", "anomalies"});
        cfg.dataset_name = v.get_string(ds, "$.dataset", "name", "dataset");
        cfg.recipe.seed = v.get_size(ds, "$.dataset", "seed", 42);
        cfg.recipe.samples_per_run = v.get_size(ds, "$.dataset", "samples_per_run", 500);
        cfg.recipe.run_count = v.get_size(ds, "$.dataset", "run_count", 3);
        cfg.recipe.noise_sigma = v.get_double(ds, "$.dataset", "noise_sigma", 0.01);
        cfg.recipe.jitter = v.get_size(ds, "$.dataset", "jitter", 0);
        cfg.recipe.sample_interval_s =
            v.get_double(ds, "$.dataset", "sample_interval_s", 0.1);
        if (cfg.recipe.samples_per_run < 20)
            v.fail("$.dataset.samples_per_run", "must be at least 20");

        parse_variables(ds, "$.dataset", v, cfg.recipe);

        if (ds.contains("anomalies")) {
            const json& arr = ds.at("anomalies");
            if (!arr.is_array()) {
                v.fail("$.dataset.anomalies", "expected an array");
            } else {
                for (std::size_t i = 0; i < arr.size(); ++i)
                    parse_anomaly(arr[i],
                                  "$.dataset.anomalies[" + std::to_string(i) + "]", v,
                                  cfg.recipe, cfg.anomalies);
            }
        }
    }

    const std::size_t D = cfg.recipe.variables.size();

    // model -----------------------------------------------------------------
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        if (!m.is_object()) {
            v.fail("$.model", "expected an object");
        } else {
            v.check_keys(m, "$.model",
                         {"kind", "num_stacks", "blocks_per_stack", "basis_dim",
                          "hidden_width", "embed_dim", "top_k", "top_k_list",
                          "input_bias", "leaky_slope"});
            cfg.model.kind = v.get_string(m, "$.model", "kind", "gnn");
            if (cfg.model.kind != "gnn" && cfg.model.kind != "nbeats")
                v.fail("$.model.kind", "expected \"nbeats\" or \"gnn\", got \"" +
                                           cfg.model.kind + "\"");
            cfg.model.nbeats.num_stacks = v.get_size(m, "$.model", "num_stacks", 2);
            cfg.model.nbeats.blocks_per_stack =
                v.get_size(m, "$.model", "blocks_per_stack", 2);
            cfg.model.nbeats.basis_dim = v.get_size(m, "$.model", "basis_dim", 4);
            cfg.model.nbeats.hidden_width = v.get_size(m, "$.model", "hidden_width", 128);
            cfg.model.graph.embed_dim = v.get_size(m, "$.model", "embed_dim", 128);
            cfg.model.graph.top_k = v.get_size(m, "$.model", "top_k", 1);
            cfg.model.graph.input_bias = v.get_bool(m, "$.model", "input_bias", true);
            cfg.model.graph.leaky_slope = v.get_double(m, "$.model", "leaky_slope", 0.2);

            if (D > 1 && cfg.model.graph.top_k > D - 1)
                v.fail("$.model.top_k", "top_k " + std::to_string(cfg.model.graph.top_k) +
                                            " exceeds D-1 = " + std::to_string(D - 1));
            if (D == 1 && cfg.model.graph.top_k != 0)
                v.fail("$.model.top_k", "must be 0 for a single-variable dataset");

            if (m.contains("top_k_list")) {
                const json& ks = m.at("top_k_list");
                if (!ks.is_array() || ks.empty()) {
                    v.fail("$.model.top_k_list", "expected a non-empty array");
                } else {
                    cfg.model.top_k_list.clear();
                    for (std::size_t i = 0; i < ks.size(); ++i) {
                        const std::string kpath =
                            "$.model.top_k_list[" + std::to_string(i) + "]";
                        if (!ks[i].is_number_unsigned()) {
                            v.fail(kpath, "expected a non-negative integer");
                            continue;
                        }
                        const std::size_t k = ks[i].get<std::size_t>();
                        if (D > 1 && (k < 1 || k > D - 1))
                            v.fail(kpath, "top_k " + std::to_string(k) +
                                              " outside 1.." + std::to_string(D - 1));
                        cfg.model.top_k_list.push_back(k);
                    }
                }
            }
        }
    } else if (D == 1) {
        cfg.model.graph.top_k = 0;
    }

    // training --------------------------------------------------------------
    if (doc.contains("training")) {
        const json& t = doc.at("training");
        if (!t.is_object()) {
            v.fail("$.training", "expected an object");
        } else {
            v.check_keys(t, "$.training", {"epochs", "patience", "batch", "lr", "plateau"});
            cfg.training.max_epochs = v.get_size(t, "$.training", "epochs", 1000);
            cfg.training.early_stop_patience = v.get_size(t, "$.training", "patience", 100);
            cfg.training.batch_size = v.get_size(t, "$.training", "batch", 32);
            cfg.training.lr = v.get_double(t, "$.training", "lr", 0.001);
            if (cfg.training.max_epochs == 0)
                v.fail("$.training.epochs", "must be positive");
            if (cfg.training.batch_size == 0)
                v.fail("$.training.batch", "must be positive");
            if (cfg.training.lr <= 0.0)
                v.fail("$.training.lr", "must be positive");
            if (t.contains("plateau")) {
                const json& p = t.at("plateau");
                if (!p.is_object()) {
                    v.fail("$.training.plateau", "expected an object");
                } else {
                    v.check_keys(p, "$.training.plateau", {"factor", "patience"});
                    cfg.training.plateau_factor =
                        v.get_double(p, "$.training.plateau", "factor", 0.5);
                    cfg.training.plateau_patience = static_cast<int>(
                        v.get_size(p, "$.training.plateau", "patience", 5));
                }
            }
        }
    }

    // detection ---------------------------------------------------------------
    if (doc.contains("detection")) {
        const json& d = doc.at("detection");
        if (!d.is_object()) {
            v.fail("$.detection", "expected an object");
        } else {
            v.check_keys(d, "$.detection", {"b", "th"});
            cfg.detection.top_b = v.get_size(d, "$.detection", "b", 1);
            cfg.detection.threshold = v.get_double(d, "$.detection", "th", 0.1);
            if (cfg.detection.top_b == 0 || (D > 0 && cfg.detection.top_b > D))
                v.fail("$.detection.b", "must be within 1.." + std::to_string(D));
        }
    }

    // windows -----------------------------------------------------------------
    if (doc.contains("windows")) {
        const json& w = doc.at("windows");
        if (!w.is_array() || w.empty()) {
            v.fail("$.windows", "expected a non-empty array of [L, H] pairs");
        } else {
            cfg.windows.clear();
            for (std::size_t i = 0; i < w.size(); ++i) {
                const std::string wpath = "$.windows[" + std::to_string(i) + "]";
                const json& pair = w[i];
                if (!pair.is_array() || pair.size() != 2 ||
                    !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
                    v.fail(wpath, "expected [lookback, horizon]");
                    continue;
                }
                const std::size_t L = pair[0].get<std::size_t>();
                const std::size_t H = pair[1].get<std::size_t>();
                bool supported = false;
                for (const auto& [gl, gh] : supported_windows())
                    if (gl == L && gh == H) supported = true;
                if (!supported) {
                    v.fail(wpath, "(" + std::to_string(L) + ", " + std::to_string(H) +
                                      ") is not in the supported window grid");
                    continue;
                }
                cfg.windows.emplace_back(L, H);
            }
        }
    }

    // scalars -------------------------------------------------------------------
    cfg.seed = v.get_size(doc, "$", "seed", 42);
    cfg.out_dir = v.get_string(doc, "$", "out_dir", "");
    if (cfg.out_dir.empty()) {
        const char* env = std::getenv("TRACECAST_OUT");
        cfg.out_dir = env != nullptr && *env != '\0' ? env : "./out";
    }

    if (!v.errors.empty()) {
        std::string msg = "invalid config:";
        for (const std::string& e : v.errors) {
            msg += "\n  ";
            msg += e;
        }
        throw ConfigError(msg);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return validate_config(ss.str());
}

} // namespace tracecast
