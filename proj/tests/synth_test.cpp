#include "tracecast/errors.hpp"
#include "tracecast/synth.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

using namespace tracecast;

namespace {

RecipeSpec three_class_recipe(std::uint64_t seed = 42) {
    RecipeSpec spec;
    spec.seed = seed;
    spec.variables = {{"step_1", SignalClass::StepLike},
                      {"step_2", SignalClass::StepLike},
                      {"smooth_1", SignalClass::SmoothNoisy},
                      {"idle_1", SignalClass::Idle}};
    spec.samples_per_run = 500;
    spec.run_count = 3;
    spec.noise_sigma = 0.01;
    return spec;
}

std::vector<double> column_of_run(const Trace& t, std::size_t run, std::size_t d) {
    std::vector<double> out(t.run_length);
    for (std::size_t i = 0; i < t.run_length; ++i)
        out[i] = t.values.at(run * t.run_length + i, d);
    return out;
}

} // namespace

TEST_SUITE("synth") {

TEST_CASE("identical seeds give identical traces") {
    Trace a = generate(three_class_recipe(7));
    Trace b = generate(three_class_recipe(7));
    CHECK(a.values.values() == b.values.values());  // bitwise

    Trace c = generate(three_class_recipe(8));
    CHECK(a.values.values() != c.values.values());
}

TEST_CASE("idle variables hold one level for the whole trace") {
    Trace t = generate(three_class_recipe());
    const double level = t.values.at(0, 3);
    for (std::size_t r = 0; r < t.rows(); ++r)
        CHECK(t.values.at(r, 3) == level);
    CHECK(level >= 0.0);
    CHECK(level <= 1.0);
}

TEST_CASE("without jitter every run repeats the step schedule exactly") {
    Trace t = generate(three_class_recipe());
    for (std::size_t d : {0ul, 1ul}) {
        const std::vector<double> run0 = column_of_run(t, 0, d);
        CHECK(column_of_run(t, 1, d) == run0);
        CHECK(column_of_run(t, 2, d) == run0);
    }
    // smooth variables get fresh noise per run, so those differ
    CHECK(column_of_run(t, 0, 2) != column_of_run(t, 1, 2));
}

TEST_CASE("jitter offsets each run against one shared schedule") {
    RecipeSpec spec = three_class_recipe();
    spec.jitter = 5;
    Trace t = generate(spec);
    const std::vector<double> run0 = column_of_run(t, 0, 0);
    const std::vector<double> run1 = column_of_run(t, 1, 0);

    // each run is the same schedule read through a fixed offset in [-5, 5],
    // clamped at the ends; away from the ends the two runs line up exactly
    // under some relative shift of at most 2*jitter
    auto shift_of = [&](const std::vector<double>& shifted,
                        const std::vector<double>& reference) {
        const long n = static_cast<long>(reference.size());
        for (long d = -10; d <= 10; ++d) {
            bool ok = true;
            for (long i = 20; i < n - 20 && ok; ++i)
                ok = shifted[static_cast<std::size_t>(i)] ==
                     reference[static_cast<std::size_t>(i - d)];
            if (ok) return d;
        }
        return std::numeric_limits<long>::max();
    };
    const long d01 = shift_of(run1, run0);
    CHECK(d01 != std::numeric_limits<long>::max());
    CHECK(std::labs(d01) <= 10);

    // levels themselves are unchanged by the shift
    std::vector<double> lv0 = run0, lv1 = run1;
    std::sort(lv0.begin(), lv0.end());
    std::sort(lv1.begin(), lv1.end());
    lv0.erase(std::unique(lv0.begin(), lv0.end()), lv0.end());
    lv1.erase(std::unique(lv1.begin(), lv1.end()), lv1.end());
    CHECK(lv0 == lv1);
}

TEST_CASE("step schedules read as genuine plateaus") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        Trace t = generate(three_class_recipe(seed));
        const std::vector<double> col = column_of_run(t, 0, 0);

        // transitions carry at least the minimum contrast
        const std::vector<std::size_t> edges = detect_edges(col, 0.19);
        CHECK(edges.size() >= 2);  // 3..8 plateaus
        CHECK(edges.size() <= 7);

        // no small wobble between the detected edges
        const std::vector<std::size_t> all_changes = detect_edges(col, 1e-12);
        CHECK(all_changes == edges);

        for (double v : col) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("recipe validation") {
    RecipeSpec spec = three_class_recipe();
    spec.variables.clear();
    CHECK_THROWS_AS(generate(spec), ConfigError);

    spec = three_class_recipe();
    spec.samples_per_run = 10;
    CHECK_THROWS_AS(generate(spec), ConfigError);

    spec = three_class_recipe();
    spec.variables.push_back({"step_1", SignalClass::Idle});
    CHECK_THROWS_AS(generate(spec), ConfigError);

    spec = three_class_recipe();
    spec.jitter = spec.samples_per_run;
    CHECK_THROWS_AS(generate(spec), ConfigError);

    spec = three_class_recipe();
    spec.noise_sigma = -0.5;
    CHECK_THROWS_AS(generate(spec), ConfigError);
}

TEST_CASE("amplitude shift adds a constant over the segment of the test run") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));

    AnomalySpec spec;
    spec.target_variable = "step_1";
    spec.category = AnomalyCategory::AmplitudeShift;
    spec.segment_begin = 120;
    spec.segment_end = 220;
    spec.amplitude_delta = 0.35;

    LabeledTrace out = inject(clean, spec, recipe);
    const std::size_t N = out.trace.run_length;
    const std::size_t base = out.trace.rows() - N;

    for (std::size_t i = 0; i < N; ++i) {
        const double orig = clean.trace.values.at(base + i, 0);
        const double got = out.trace.values.at(base + i, 0);
        const bool inside = i >= 120 && i < 220;
        CHECK(got == doctest::Approx(inside ? orig + 0.35 : orig).epsilon(1e-15));
        CHECK(out.labels.at(base + i, 0) == (inside ? 1.0 : 0.0));
    }
    // training rows and other variables stay untouched
    for (std::size_t r = 0; r < base; ++r)
        CHECK(out.trace.values.at(r, 0) == clean.trace.values.at(r, 0));
    for (std::size_t i = 0; i < N; ++i)
        CHECK(out.trace.values.at(base + i, 1) == clean.trace.values.at(base + i, 1));

    REQUIRE(out.injections.size() == 1);
    CHECK(out.injections[0].anomaly_ratio == doctest::Approx(100.0 / 500.0));
}

TEST_CASE("time shift with zero lag changes nothing") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));

    AnomalySpec spec;
    spec.target_variable = "step_1";
    spec.category = AnomalyCategory::TimeShift;
    spec.segment_begin = 100;
    spec.segment_end = 400;
    spec.lag = 0;

    LabeledTrace out = inject(clean, spec, recipe);
    CHECK(out.trace.values.values() == clean.trace.values.values());
    CHECK(out.injections[0].anomaly_ratio == 0.0);
}

TEST_CASE("time shift delays the signal inside the segment") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));
    const std::size_t N = clean.trace.run_length;
    const std::size_t base = clean.trace.rows() - N;

    AnomalySpec spec;
    spec.target_variable = "step_2";
    spec.category = AnomalyCategory::TimeShift;
    spec.segment_begin = 50;
    spec.segment_end = 450;
    spec.lag = 30;

    LabeledTrace out = inject(clean, spec, recipe);
    for (std::size_t i = 60; i < 440; ++i) {
        const double expected = clean.trace.values.at(base + i - 30, 1);
        CHECK(out.trace.values.at(base + i, 1) == expected);
    }
    // the delayed edges leave labeled stretches
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < N; ++i)
        flagged += out.labels.at(base + i, 1) != 0.0 ? 1 : 0;
    CHECK(flagged > 0);
    CHECK(out.injections[0].anomaly_ratio ==
          doctest::Approx(double(flagged) / double(N)));
}

TEST_CASE("step shift moves one plateau edge and labels the gap") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));
    const std::size_t N = clean.trace.run_length;
    const std::size_t base = clean.trace.rows() - N;

    std::vector<double> col(N);
    for (std::size_t i = 0; i < N; ++i)
        col[i] = clean.trace.values.at(base + i, 0);
    const std::vector<std::size_t> edges = detect_edges(col, 0.1);
    REQUIRE(!edges.empty());

    // pick an interior edge and bracket it tightly so it is the nearest to
    // the segment midpoint
    std::size_t edge = edges[edges.size() / 2];
    AnomalySpec spec;
    spec.target_variable = "step_1";
    spec.category = AnomalyCategory::StepShift;
    spec.segment_begin = edge - 3;
    spec.segment_end = edge + 4;
    spec.edge_displacement = -5;

    LabeledTrace out = inject(clean, spec, recipe);
    for (std::size_t i = 0; i < N; ++i) {
        const bool inside = i >= edge - 5 && i < edge;
        CHECK(out.labels.at(base + i, 0) == (inside ? 1.0 : 0.0));
        const double expected = inside ? col[edge] : col[i];
        CHECK(out.trace.values.at(base + i, 0) == expected);
    }

    // a positive displacement lets the old level linger instead
    spec.edge_displacement = 6;
    LabeledTrace later = inject(clean, spec, recipe);
    for (std::size_t i = 0; i < N; ++i) {
        const bool inside = i >= edge && i < edge + 6;
        CHECK(later.labels.at(base + i, 0) == (inside ? 1.0 : 0.0));
    }
}

TEST_CASE("injections stack through label OR") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));

    AnomalySpec first;
    first.target_variable = "step_1";
    first.category = AnomalyCategory::AmplitudeShift;
    first.segment_begin = 100;
    first.segment_end = 200;
    first.amplitude_delta = 0.3;

    AnomalySpec second = first;
    second.segment_begin = 150;
    second.segment_end = 250;

    LabeledTrace out = inject(inject(clean, first, recipe), second, recipe);
    const std::size_t N = out.trace.run_length;
    const std::size_t base = out.trace.rows() - N;
    for (std::size_t i = 0; i < N; ++i)
        CHECK(out.labels.at(base + i, 0) == ((i >= 100 && i < 250) ? 1.0 : 0.0));
    CHECK(out.injections.size() == 2);
}

TEST_CASE("injection validation") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));

    AnomalySpec spec;
    spec.target_variable = "nope";
    spec.category = AnomalyCategory::AmplitudeShift;
    spec.segment_begin = 10;
    spec.segment_end = 20;
    spec.amplitude_delta = 0.5;
    CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);

    spec.target_variable = "smooth_1";  // not step-like
    CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);

    spec.target_variable = "step_1";
    spec.segment_begin = 20;
    spec.segment_end = 20;  // empty
    CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);
    spec.segment_end = 501;  // past the run
    CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);

    spec.category = AnomalyCategory::StepShift;
    spec.segment_begin = 0;
    spec.segment_end = 500;
    spec.edge_displacement = 0;  // must be nonzero
    CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);

    // a flat stretch has no edge to move
    std::vector<double> col(500);
    const std::size_t base = clean.trace.rows() - 500;
    for (std::size_t i = 0; i < 500; ++i)
        col[i] = clean.trace.values.at(base + i, 0);
    const std::vector<std::size_t> edges = detect_edges(col, 0.1);
    REQUIRE(edges.size() >= 2);
    spec.edge_displacement = 3;
    spec.segment_begin = edges[0] + 1;
    spec.segment_end = edges[1];  // strictly between two edges
    if (spec.segment_end > spec.segment_begin)
        CHECK_THROWS_AS(inject(clean, spec, recipe), ConfigError);
}

TEST_CASE("edge detection") {
    CHECK(detect_edges({0, 0, 1, 1}, 0.5) == std::vector<std::size_t>{2});
    CHECK(detect_edges({0, 0.4, 0.8, 1.2}, 0.5).empty());
    CHECK(detect_edges({1, 0, 1, 0}, 0.5) == std::vector<std::size_t>{1, 2, 3});
    CHECK(detect_edges({}, 0.5).empty());
    CHECK(detect_edges({3.0}, 0.5).empty());
}

TEST_CASE("descriptor summarises attacked variables and categories") {
    RecipeSpec recipe = three_class_recipe();
    LabeledTrace clean = make_labeled(generate(recipe));

    CHECK(describe(clean).attacked_count == 0);
    CHECK(describe(clean).categories.empty());
    CHECK(describe(clean).anomaly_ratio == 0.0);

    AnomalySpec amp;
    amp.target_variable = "step_1";
    amp.category = AnomalyCategory::AmplitudeShift;
    amp.segment_begin = 100;
    amp.segment_end = 200;
    amp.amplitude_delta = 0.4;

    AnomalySpec lag;
    lag.target_variable = "step_2";
    lag.category = AnomalyCategory::TimeShift;
    lag.segment_begin = 150;
    lag.segment_end = 350;
    lag.lag = 25;

    LabeledTrace out = inject(inject(clean, amp, recipe), lag, recipe);
    DatasetDescriptor desc = describe(out);
    CHECK(desc.variable_count == 4);
    CHECK(desc.attacked_count == 2);
    CHECK(desc.categories == "amplitude shift + time shift");
    REQUIRE(desc.per_variable.size() == 2);
    CHECK(desc.per_variable[0].first == "step_1");
    CHECK(desc.per_variable[0].second == doctest::Approx(0.2));
    CHECK(desc.per_variable[1].first == "step_2");
    CHECK(desc.anomaly_ratio >= desc.per_variable[0].second);
    CHECK(desc.anomaly_ratio <= 1.0);
}

} // TEST_SUITE
