#include "fedbench/monitor.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/metrics.hpp"
#include "fedbench/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fedbench;

namespace {

ParamVector vec(std::vector<double> values) {
    ParamVector p;
    p.layout = {{"w0", {values.size()}, 0}};
    p.values = std::move(values);
    return p;
}

ClientUpdate update_with(int client_id, ParamVector params) {
    ClientUpdate u;
    u.client_id = client_id;
    u.n_samples = 10;
    u.params = std::move(params);
    u.train_loss_trace = {0.5, 0.4};
    u.val_loss = 0.4;
    u.val_accuracy = 0.8;
    return u;
}

JCurve curve_of(int client_id, std::vector<double> thresholds, std::vector<double> j) {
    JCurve c;
    c.client_id = client_id;
    c.thresholds = std::move(thresholds);
    c.j_values = std::move(j);
    return c;
}

}  // namespace

TEST_SUITE("fed-monitor") {

TEST_CASE("null updates give zero norms and zero cosines") {
    const ParamVector global = vec({1.0, 2.0, 3.0});
    std::vector<ClientUpdate> updates;
    for (int c = 0; c < 3; ++c) updates.push_back(update_with(c, global));
    const RoundDiagnostics d = summarize_round(global, updates, 0);
    for (const auto& s : d.summaries) CHECK(s.update_norm == 0.0);
    for (double v : d.similarity.values) CHECK(v == 0.0);
}

TEST_CASE("collinear and opposite updates") {
    const ParamVector global = vec({0.0, 0.0});
    std::vector<ClientUpdate> updates;
    updates.push_back(update_with(0, vec({1.0, 1.0})));    // u
    updates.push_back(update_with(1, vec({2.0, 2.0})));    // 2u
    updates.push_back(update_with(2, vec({-1.0, -1.0})));  // -u
    const RoundDiagnostics d = summarize_round(global, updates, 2);
    CHECK(d.similarity.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.similarity.at(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(d.summaries[1].update_norm ==
          doctest::Approx(2.0 * d.summaries[0].update_norm).epsilon(1e-12));
    CHECK(d.summaries[0].round == 2);
    // diagonal is 1 for nonzero updates; matrix is symmetric and bounded
    const std::size_t k = d.similarity.client_ids.size();
    for (std::size_t i = 0; i < k; ++i) {
        CHECK(d.similarity.at(i, i) == 1.0);
        for (std::size_t j = 0; j < k; ++j) {
            CHECK(d.similarity.at(i, j) == d.similarity.at(j, i));
            CHECK(std::abs(d.similarity.at(i, j)) <= 1.0);
        }
    }
}

TEST_CASE("summarize_round rejects layout mismatches") {
    const ParamVector global = vec({0.0, 0.0});
    std::vector<ClientUpdate> updates{update_with(0, vec({1.0}))};
    CHECK_THROWS_AS(summarize_round(global, updates, 0), ComputeError);
}

TEST_CASE("flagging needs history and enough clients") {
    const ParamVector global = vec({0.0});
    std::vector<ClientUpdate> two{update_with(0, vec({1.0})), update_with(1, vec({1.0}))};
    const RoundDiagnostics d = summarize_round(global, two, 0);
    CHECK_THROWS_AS(flag_outlier_clients({d}, OutlierPolicy{3.0}), ValidationError);
    CHECK_THROWS_AS(flag_outlier_clients({d, d}, OutlierPolicy{3.0}), ValidationError);
}

TEST_CASE("exchangeable clients raise no flags") {
    Rng rng(301);
    std::vector<RoundDiagnostics> history;
    for (int round = 0; round < 4; ++round) {
        const ParamVector global = vec({0.0, 0.0, 0.0, 0.0});
        std::vector<ClientUpdate> updates;
        for (int c = 0; c < 8; ++c) {
            std::vector<double> delta(4);
            for (double& v : delta) v = rng.normal(0.5, 0.05);
            ClientUpdate u = update_with(c, vec(delta));
            u.val_accuracy = 0.8 + 0.01 * rng.normal();
            updates.push_back(std::move(u));
        }
        history.push_back(summarize_round(global, updates, round));
    }
    CHECK(flag_outlier_clients(history, OutlierPolicy{3.0}).empty());
}

TEST_CASE("an opposed client is flagged for low cosine similarity") {
    Rng rng(302);
    std::vector<RoundDiagnostics> history;
    for (int round = 0; round < 4; ++round) {
        const ParamVector global = vec({0.0, 0.0, 0.0, 0.0});
        std::vector<ClientUpdate> updates;
        for (int c = 0; c < 8; ++c) {
            std::vector<double> delta(4);
            for (double& v : delta) v = rng.normal(0.5, 0.02);
            if (c == 5) {
                for (double& v : delta) v = -v;  // points the other way
            }
            updates.push_back(update_with(c, vec(delta)));
        }
        history.push_back(summarize_round(global, updates, round));
    }
    const auto flags = flag_outlier_clients(history, OutlierPolicy{3.0});
    REQUIRE(!flags.empty());
    CHECK(flags[0].client_id == 5);
    CHECK(flags[0].reason.find("cosine") != std::string::npos);
}

TEST_CASE("j-curve of a perfect model peaks at 1 and matches the optimizer") {
    // deterministic separable validation set
    Dataset validation;
    validation.dim = 1;
    for (int i = 0; i < 20; ++i) {
        Example e;
        e.id = i;
        e.label = i < 10 ? 0 : 1;
        e.features = {e.label == 1 ? 3.0 + 0.1 * i : -3.0 - 0.1 * i};
        validation.examples.push_back(std::move(e));
    }
    PredictorSpec spec;
    spec.kind = PredictorKind::Logistic;
    spec.input_dim = 1;
    ParamVector model = vec({2.0, 0.0});
    model.layout = {{"w0", {1, 1}, 0}, {"b0", {1}, 1}};

    const auto grid = default_threshold_grid(101);
    const JCurve curve = compute_j_curve(model, spec, validation, grid, 3);
    CHECK(curve.client_id == 3);
    CHECK(curve.thresholds.size() == 101);
    CHECK(*std::max_element(curve.j_values.begin(), curve.j_values.end()) == 1.0);
    for (double j : curve.j_values) {
        CHECK(j >= -1.0);
        CHECK(j <= 1.0);
    }

    // grid point J agrees with eval-metrics at the optimizer's choice
    const auto probs = predict_probabilities(model, spec, validation);
    std::vector<int> labels(validation.size());
    for (std::size_t i = 0; i < validation.size(); ++i) labels[i] = validation.examples[i].label;
    const ThresholdChoice choice = optimize_threshold(probs, labels);
    double best_on_grid = -2.0;
    for (double j : curve.j_values) best_on_grid = std::max(best_on_grid, j);
    CHECK(best_on_grid == choice.achieved_j);  // grid spans a separating threshold

    const JCurve tiny = compute_j_curve(model, spec, validation,
                                        std::vector<double>{0.5}, 0);
    CHECK(tiny.j_values.size() == 1);
}

TEST_CASE("aggregate_thresholds matches the rules") {
    const std::vector<double> grid{0.2, 0.8};
    const std::vector<JCurve> two{curve_of(0, grid, {0.9, 0.1}),
                                  curve_of(1, grid, {0.2, 0.8})};
    const ThresholdAggregate worst = aggregate_thresholds(two, AggregationRule::WorstCase);
    CHECK(worst.threshold == 0.2);  // pointwise min (0.2, 0.1)
    CHECK(worst.aggregate_j == doctest::Approx(0.2).epsilon(1e-15));

    const ThresholdAggregate mean = aggregate_thresholds(two, AggregationRule::Mean);
    CHECK(mean.aggregate_j == doctest::Approx(0.55).epsilon(1e-12));

    // identical curves: every rule returns the common argmax
    const std::vector<JCurve> same{curve_of(0, grid, {0.3, 0.7}),
                                   curve_of(1, grid, {0.3, 0.7})};
    for (AggregationRule rule :
         {AggregationRule::Mean, AggregationRule::Median, AggregationRule::WorstCase}) {
        const ThresholdAggregate agg = aggregate_thresholds(same, rule);
        CHECK(agg.threshold == 0.8);
        CHECK(agg.aggregate_j == doctest::Approx(0.7).epsilon(1e-15));
    }

    // a single curve is invariant across rules
    const std::vector<JCurve> one{curve_of(0, grid, {0.4, 0.1})};
    const double t = aggregate_thresholds(one, AggregationRule::Mean).threshold;
    CHECK(t == aggregate_thresholds(one, AggregationRule::Median).threshold);
    CHECK(t == aggregate_thresholds(one, AggregationRule::WorstCase).threshold);

    CHECK_THROWS_AS(
        aggregate_thresholds({curve_of(0, {0.1}, {0.0}), curve_of(1, {0.2}, {0.0})},
                             AggregationRule::Mean),
        ComputeError);
    CHECK_THROWS_AS(aggregate_thresholds({}, AggregationRule::Mean), ValidationError);
}

TEST_CASE("aggregate rules are ordered and permutation-invariant") {
    Rng rng(303);
    const auto grid = default_threshold_grid(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<JCurve> curves;
        for (int c = 0; c < 5; ++c) {
            std::vector<double> j(grid.size());
            for (double& v : j) v = rng.uniform() * 2.0 - 1.0;
            curves.push_back(curve_of(c, grid, std::move(j)));
        }
        const auto worst = aggregate_thresholds(curves, AggregationRule::WorstCase);
        const auto median = aggregate_thresholds(curves, AggregationRule::Median);
        const auto mean = aggregate_thresholds(curves, AggregationRule::Mean);
        // max of the pointwise min cannot exceed max of median or mean
        CHECK(worst.aggregate_j <= median.aggregate_j + 1e-12);
        CHECK(worst.aggregate_j <= mean.aggregate_j + 1e-12);

        std::vector<JCurve> reversed(curves.rbegin(), curves.rend());
        const auto again = aggregate_thresholds(reversed, AggregationRule::Median);
        CHECK(again.threshold == median.threshold);
        CHECK(again.aggregate_j == median.aggregate_j);
    }
}

TEST_CASE("default grid spans [0,1] evenly") {
    const auto grid = default_threshold_grid(101);
    CHECK(grid.size() == 101);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    CHECK(grid[50] == doctest::Approx(0.5).epsilon(1e-15));
}

}  // TEST_SUITE
