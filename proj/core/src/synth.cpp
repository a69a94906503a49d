#include "tracecast/synth.hpp"

#include "tracecast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tracecast {

namespace {

// Per-variable RNG stream, decoupled from the draw counts of other variables.
std::mt19937_64 variable_rng(std::uint64_t seed, std::size_t index) {
    return std::mt19937_64(seed ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

std::size_t clamp_index(long i, std::size_t n) {
    if (i < 0) return 0;
    if (static_cast<std::size_t>(i) >= n) return n - 1;
    return static_cast<std::size_t>(i);
}

// Piecewise-constant schedule: 3..8 plateaus with random widths and levels
// from [0,1]. Adjacent levels keep a minimum contrast so the transitions
// read as genuine steps rather than noise-scale wiggles.
std::vector<double> step_schedule(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> plateau_count(3, 8);
    const int plateaus = plateau_count(rng);

    std::uniform_real_distribution<double> weight(0.5, 1.5);
    std::vector<double> widths(plateaus);
    double total = 0.0;
    for (double& w : widths) {
        w = weight(rng);
        total += w;
    }

    std::uniform_real_distribution<double> level(0.0, 1.0);
    std::vector<double> levels(plateaus);
    levels[0] = level(rng);
    for (int p = 1; p < plateaus; ++p) {
        double v = level(rng);
        for (int attempt = 0; attempt < 100 && std::fabs(v - levels[p - 1]) < 0.2;
             ++attempt)
            v = level(rng);
        levels[p] = v;
    }

    std::vector<double> out(n);
    std::size_t pos = 0;
    double cum = 0.0;
    for (int p = 0; p < plateaus; ++p) {
        cum += widths[p];
        std::size_t end = p + 1 == plateaus
                              ? n
                              : static_cast<std::size_t>(std::lround(
                                    cum / total * static_cast<double>(n)));
        end = std::min(end, n);
        for (; pos < end; ++pos) out[pos] = levels[p];
    }
    for (; pos < n; ++pos) out[pos] = levels[plateaus - 1];
    return out;
}

// Smooth baseline: a base level plus 2..5 logistic ramps of random centre,
// width and signed amplitude. Noise is added later, per run.
std::vector<double> smooth_schedule(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> ramp_count(2, 5);
    const int ramps = ramp_count(rng);
    std::uniform_real_distribution<double> base_level(0.2, 0.8);
    std::uniform_real_distribution<double> centre(0.1 * n, 0.9 * n);
    std::uniform_real_distribution<double> width(n / 40.0, n / 10.0);
    std::uniform_real_distribution<double> amplitude(-0.4, 0.4);

    const double base = base_level(rng);
    std::vector<double> cs(ramps), ws(ramps), as(ramps);
    for (int r = 0; r < ramps; ++r) {
        cs[r] = centre(rng);
        ws[r] = width(rng);
        as[r] = amplitude(rng);
    }

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = base;
        for (int r = 0; r < ramps; ++r)
            v += as[r] / (1.0 + std::exp(-(static_cast<double>(i) - cs[r]) / ws[r]));
        out[i] = v;
    }
    return out;
}

void validate_recipe(const RecipeSpec& spec) {
    if (spec.variables.empty())
        throw ConfigError("recipe has no variables");
    if (spec.samples_per_run < 20)
        throw ConfigError("recipe needs at least 20 samples per run, got " +
                          std::to_string(spec.samples_per_run));
    if (spec.run_count == 0)
        throw ConfigError("recipe run count must be positive");
    if (spec.noise_sigma < 0.0)
        throw ConfigError("recipe noise sigma must be non-negative");
    if (spec.jitter >= spec.samples_per_run)
        throw ConfigError("recipe jitter must be smaller than the run length");
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
        if (spec.variables[i].name.empty())
            throw ConfigError("recipe variable " + std::to_string(i) + " has no name");
        for (std::size_t j = i + 1; j < spec.variables.size(); ++j)
            if (spec.variables[i].name == spec.variables[j].name)
                throw ConfigError("recipe has duplicate variable name \"" +
                                  spec.variables[i].name + "\"");
    }
}

} // namespace

const char* signal_class_name(SignalClass c) {
    switch (c) {
    case SignalClass::StepLike: return "step_like";
    case SignalClass::SmoothNoisy: return "smooth_noisy";
    case SignalClass::Idle: return "idle";
    }
    return "unknown";
}

const char* anomaly_category_name(AnomalyCategory c) {
    switch (c) {
    case AnomalyCategory::AmplitudeShift: return "amplitude_shift";
    case AnomalyCategory::TimeShift: return "time_shift";
    case AnomalyCategory::StepShift: return "step_shift";
    }
    return "unknown";
}

Trace generate(const RecipeSpec& spec) {
    validate_recipe(spec);
    const std::size_t N = spec.samples_per_run;
    const std::size_t R = spec.run_count;
    const std::size_t D = spec.variables.size();

    Trace trace;
    trace.values = Tensor({R * N, D});
    trace.sample_interval_s = spec.sample_interval_s;
    trace.run_length = N;
    trace.run_count = R;
    trace.variable_names.reserve(D);
    for (const VariableSpec& var : spec.variables)
        trace.variable_names.push_back(var.name);

    for (std::size_t d = 0; d < D; ++d) {
        std::mt19937_64 rng = variable_rng(spec.seed, d);
        const SignalClass cls = spec.variables[d].signal_class;

        if (cls == SignalClass::Idle) {
            std::uniform_real_distribution<double> level(0.0, 1.0);
            const double v = level(rng);
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t i = 0; i < N; ++i)
                    trace.values.at(r * N + i, d) = v;
            continue;
        }

        const std::vector<double> schedule = cls == SignalClass::StepLike
                                                 ? step_schedule(rng, N)
                                                 : smooth_schedule(rng, N);

        std::vector<long> offsets(R, 0);
        if (spec.jitter > 0) {
            std::uniform_int_distribution<long> off(-static_cast<long>(spec.jitter),
                                                    static_cast<long>(spec.jitter));
            for (std::size_t r = 0; r < R; ++r) offsets[r] = off(rng);
        }

        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t src =
                    clamp_index(static_cast<long>(i) - offsets[r], N);
                double v = schedule[src];
                if (cls == SignalClass::SmoothNoisy && spec.noise_sigma > 0.0)
                    v += noise(rng);
                trace.values.at(r * N + i, d) = v;
            }
        }
    }
    return trace;
}

LabeledTrace make_labeled(Trace trace) {
    LabeledTrace out;
    out.labels = Tensor({trace.rows(), trace.variables()});
    out.trace = std::move(trace);
    return out;
}

std::vector<std::size_t> detect_edges(const std::vector<double>& column,
                                      double threshold) {
    std::vector<std::size_t> edges;
    for (std::size_t i = 1; i < column.size(); ++i)
        if (std::fabs(column[i] - column[i - 1]) > threshold)
            edges.push_back(i);
    return edges;
}

LabeledTrace inject(const LabeledTrace& base, const AnomalySpec& spec,
                    const RecipeSpec& recipe) {
    const Trace& trace = base.trace;
    const std::size_t N = trace.run_length;
    const std::size_t M = trace.rows();

    std::size_t target = trace.variables();
    for (std::size_t d = 0; d < trace.variables(); ++d)
        if (trace.variable_names[d] == spec.target_variable) target = d;
    if (target == trace.variables())
        throw ConfigError("inject: no variable named \"" + spec.target_variable + "\"");

    const VariableSpec* var = nullptr;
    for (const VariableSpec& v : recipe.variables)
        if (v.name == spec.target_variable) var = &v;
    if (var == nullptr)
        throw ConfigError("inject: variable \"" + spec.target_variable +
                          "\" is not part of the recipe");
    if (var->signal_class != SignalClass::StepLike)
        throw ConfigError("inject: target \"" + spec.target_variable + "\" is " +
                          signal_class_name(var->signal_class) +
                          "; anomalies go on step_like variables only");

    if (spec.segment_begin >= spec.segment_end || spec.segment_end > N)
        throw ConfigError("inject: segment [" + std::to_string(spec.segment_begin) +
                          ", " + std::to_string(spec.segment_end) +
                          ") is not a valid range within a run of " +
                          std::to_string(N) + " samples");

    const std::size_t test_base = M - N;  // first row of the test run
    std::vector<double> original(N);
    for (std::size_t i = 0; i < N; ++i)
        original[i] = trace.values.at(test_base + i, target);

    std::vector<double> modified = original;
    switch (spec.category) {
    case AnomalyCategory::AmplitudeShift:
        for (std::size_t i = spec.segment_begin; i < spec.segment_end; ++i)
            modified[i] += spec.amplitude_delta;
        break;
    case AnomalyCategory::TimeShift:
        // Delay by lag samples inside the segment; vacated positions take the
        // clamped boundary value of the run.
        for (std::size_t i = spec.segment_begin; i < spec.segment_end; ++i) {
            const std::size_t src =
                clamp_index(static_cast<long>(i) - spec.lag, N);
            modified[i] = original[src];
        }
        break;
    case AnomalyCategory::StepShift: {
        const std::vector<std::size_t> edges =
            detect_edges(original, spec.edge_threshold);
        std::vector<std::size_t> inside;
        for (std::size_t e : edges)
            if (e >= spec.segment_begin && e < spec.segment_end) inside.push_back(e);
        if (inside.empty())
            throw ConfigError("inject: no plateau edge of \"" + spec.target_variable +
                              "\" inside segment [" +
                              std::to_string(spec.segment_begin) + ", " +
                              std::to_string(spec.segment_end) + ")");
        // Pick the edge nearest the segment midpoint, earlier edge on ties.
        const double mid =
            (static_cast<double>(spec.segment_begin) + spec.segment_end) / 2.0;
        std::size_t edge = inside[0];
        double best = std::fabs(static_cast<double>(edge) - mid);
        for (std::size_t e : inside) {
            const double dist = std::fabs(static_cast<double>(e) - mid);
            if (dist < best) {
                best = dist;
                edge = e;
            }
        }
        if (spec.edge_displacement == 0)
            throw ConfigError("inject: step_shift displacement must be nonzero");
        const long moved = static_cast<long>(edge) + spec.edge_displacement;
        if (moved < 1 || moved >= static_cast<long>(N))
            throw ConfigError("inject: displaced edge lands at " +
                              std::to_string(moved) + ", outside the test run");
        const double before = original[edge - 1];
        const double after = original[edge];
        if (spec.edge_displacement < 0) {
            // Edge arrives earlier: the new level starts sooner.
            for (std::size_t i = static_cast<std::size_t>(moved); i < edge; ++i)
                modified[i] = after;
        } else {
            // Edge arrives later: the old level lingers.
            for (std::size_t i = edge; i < static_cast<std::size_t>(moved); ++i)
                modified[i] = before;
        }
        break;
    }
    }

    LabeledTrace out = base;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < N; ++i) {
        out.trace.values.at(test_base + i, target) = modified[i];
        if (std::fabs(modified[i] - original[i]) > spec.label_epsilon) {
            out.labels.at(test_base + i, target) = 1.0;
        }
    }
    for (std::size_t i = 0; i < N; ++i)
        if (out.labels.at(test_base + i, target) != 0.0) ++flagged;

    out.injections.push_back({spec.target_variable, spec.category,
                              static_cast<double>(flagged) / static_cast<double>(N)});
    return out;
}

DatasetDescriptor describe(const LabeledTrace& labeled) {
    const Trace& trace = labeled.trace;
    const std::size_t N = trace.run_length;
    const std::size_t M = trace.rows();
    const std::size_t D = trace.variables();
    const std::size_t test_base = M - N;

    DatasetDescriptor desc;
    desc.variable_count = D;

    std::vector<std::string> attacked;
    std::vector<std::string> categories;
    for (const InjectionSummary& inj : labeled.injections) {
        if (std::find(attacked.begin(), attacked.end(), inj.variable) == attacked.end())
            attacked.push_back(inj.variable);
        std::string cat = anomaly_category_name(inj.category);
        std::replace(cat.begin(), cat.end(), '_', ' ');
        if (std::find(categories.begin(), categories.end(), cat) == categories.end())
            categories.push_back(cat);
    }
    desc.attacked_count = attacked.size();
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (i > 0) desc.categories += " + ";
        desc.categories += categories[i];
    }

    // Per-variable ratios recomputed from the labels so stacked injections on
    // one variable do not double-count.
    for (const std::string& name : attacked) {
        std::size_t col = 0;
        for (std::size_t d = 0; d < D; ++d)
            if (trace.variable_names[d] == name) col = d;
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < N; ++i)
            if (labeled.labels.at(test_base + i, col) != 0.0) ++flagged;
        desc.per_variable.emplace_back(name,
                                       static_cast<double>(flagged) /
                                           static_cast<double>(N));
    }

    std::size_t any = 0;
    for (std::size_t i = 0; i < N; ++i) {
        bool hit = false;
        for (std::size_t d = 0; d < D && !hit; ++d)
            hit = labeled.labels.at(test_base + i, d) != 0.0;
        if (hit) ++any;
    }
    desc.anomaly_ratio = static_cast<double>(any) / static_cast<double>(N);
    return desc;
}

} // namespace tracecast
