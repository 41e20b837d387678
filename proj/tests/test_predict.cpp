#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "gdelt/predict.hpp"
#include "support.hpp"

using namespace gdelt;

namespace {

const Date kMon = *date_from_iso("2013-06-03");  // a Monday

FeatureTable day_features(const std::vector<Date>& days, std::size_t n_cols = 1) {
  FeatureTable t;
  t.resolution = Resolution::day;
  t.rows = days;
  for (std::size_t c = 0; c < n_cols; ++c)
    t.columns.push_back({"f" + std::to_string(c), "f", ColumnKind::nominal_value, "x", 0});
  t.cells.assign(days.size() * n_cols, 1.0);
  return t;
}

MarketSeries weekday_series(Date start, int bars, double base = 3000.0, double step = 1.0) {
  MarketSeries s;
  Date d = start;
  for (int i = 0; i < bars;) {
    if (!is_weekend(d)) {
      const double px = base + step * i;
      s.bars.push_back({d, px - 1, px + 2, px - 2, px, px, 1000});
      ++i;
    }
    d += Days{1};
  }
  return s;
}

TrainingTable table_from(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  TrainingTable t;
  const std::size_t nf = x.front().size();
  for (std::size_t c = 0; c < nf; ++c) t.feature_names.push_back("f" + std::to_string(c));
  for (std::size_t r = 0; r < x.size(); ++r) {
    t.dates.push_back(kMon + Days{static_cast<int>(r)});
    for (double v : x[r]) t.features.push_back(v);
    t.target.push_back(y[r]);
    t.prev_close.push_back(std::nullopt);
  }
  return t;
}

// Exhaustive split-search oracle for the root: every feature, every midpoint.
struct OracleSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -1.0;
};

OracleSplit oracle_root_split(const TrainingTable& t, std::size_t min_leaf) {
  OracleSplit best;
  const std::size_t n = t.n_rows();
  double mean = 0;
  for (double y : t.target) mean += y;
  mean /= static_cast<double>(n);
  double parent = 0;
  for (double y : t.target) parent += (y - mean) * (y - mean);
  for (std::size_t f = 0; f < t.n_features(); ++f) {
    std::vector<double> values;
    for (std::size_t r = 0; r < n; ++r) values.push_back(t.feature(r, f));
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      const double thr = distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2.0;
      std::vector<double> left, right;
      for (std::size_t r = 0; r < n; ++r)
        (t.feature(r, f) < thr ? left : right).push_back(t.target[r]);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      auto sse = [](const std::vector<double>& ys) {
        double m = 0;
        for (double y : ys) m += y;
        m /= static_cast<double>(ys.size());
        double s = 0;
        for (double y : ys) s += (y - m) * (y - m);
        return s;
      };
      const double gain = parent - sse(left) - sse(right);
      if (gain > best.gain + 1e-12) {
        best = {f, thr, gain};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("build_training_table next trading day skips the weekend") {
  // Features on Friday; market trades again on Monday.
  const Date friday = *date_from_iso("2013-06-07");
  const auto features = day_features({friday});
  const auto market = weekday_series(kMon, 10);  // June 3..14, weekdays

  const auto table = build_training_table(features, market, LagPolicy::next_trading_day);
  REQUIRE(table.n_rows() == 1);
  // Brute-force calendar walk: the next bar after Friday June 7 is Monday June 10.
  Date walk = friday + Days{1};
  while (is_weekend(walk)) walk += Days{1};
  CHECK(walk == *date_from_iso("2013-06-10"));
  double monday_close = 0;
  for (const auto& b : market.bars)
    if (b.date == walk) monday_close = b.adj_close;
  CHECK(table.target[0] == monday_close);
  CHECK(table.prev_close[0].has_value());
}

TEST_CASE("build_training_table next calendar day drops closed-market rows") {
  const Date friday = *date_from_iso("2013-06-07");
  const Date tuesday = *date_from_iso("2013-06-04");
  const auto features = day_features({friday, tuesday});
  const auto market = weekday_series(kMon, 10);

  const auto table = build_training_table(features, market, LagPolicy::next_calendar_day);
  REQUIRE(table.n_rows() == 1);  // Friday row dropped: no Saturday bar
  CHECK(table.dates[0] == tuesday);
  CHECK(table.dropped_rows == 1);
}

TEST_CASE("build_training_table errors when nothing resolves") {
  const auto features = day_features({*date_from_iso("2020-01-06")});
  const auto market = weekday_series(kMon, 5);  // all bars long before the features
  CHECK_THROWS_WITH(build_training_table(features, market, LagPolicy::next_trading_day),
                    Catch::Matchers::ContainsSubstring("zero resolvable rows"));
}

TEST_CASE("build_training_table rejects month resolution") {
  auto features = day_features({kMon});
  features.resolution = Resolution::month;
  const auto market = weekday_series(kMon, 5);
  CHECK_THROWS_WITH(build_training_table(features, market, LagPolicy::next_trading_day),
                    Catch::Matchers::ContainsSubstring("day resolution"));
}

TEST_CASE("target_diff predicts the change instead of the level") {
  const auto features = day_features({kMon});  // Monday -> target Tuesday
  const auto market = weekday_series(kMon, 5, 3000.0, 2.0);
  const auto table =
      build_training_table(features, market, LagPolicy::next_trading_day, /*target_diff=*/true);
  REQUIRE(table.n_rows() == 1);
  CHECK(table.target[0] == 2.0);  // 3002 - 3000
}

TEST_CASE("train_tree constant target gives a single leaf and empty importance") {
  const auto table = table_from({{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}, {10}},
                                {5, 5, 5, 5, 5, 5, 5, 5, 5, 5});
  const auto model = train_tree(table, {6, 2, 0.0});
  REQUIRE(model.nodes.size() == 1);
  CHECK(model.nodes[0].is_leaf());
  CHECK(model.nodes[0].mean == 5.0);
  CHECK(model.total_gain() == 0.0);
  CHECK(model.top_features(3).empty());
}

TEST_CASE("train_tree recovers a step function, threshold between distinct values") {
  // y = 1 when f0 > 5 else 0; f0 takes integer values 0..10.
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int v = 0; v <= 10; ++v) {
    for (int rep = 0; rep < 3; ++rep) {
      x.push_back({static_cast<double>(v), static_cast<double>(rep)});  // f1 is noise
      y.push_back(v > 5 ? 1.0 : 0.0);
    }
  }
  const auto table = table_from(x, y);
  const auto model = train_tree(table, {6, 2, 0.0});
  REQUIRE_FALSE(model.nodes[0].is_leaf());
  CHECK(model.nodes[0].feature == 0);
  CHECK(model.nodes[0].threshold > 5.0);
  CHECK(model.nodes[0].threshold < 6.0);

  const auto oracle = oracle_root_split(table, 2);
  CHECK(oracle.feature == 0);
  CHECK_THAT(model.nodes[0].threshold, Catch::Matchers::WithinAbs(oracle.threshold, 1e-12));
}

TEST_CASE("train_tree root split matches the exhaustive oracle on random tables") {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::uniform_int_distribution<int> feature_value(0, 6);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    for (int r = 0; r < 40; ++r) {
      x.push_back({static_cast<double>(feature_value(rng)),
                   static_cast<double>(feature_value(rng)),
                   static_cast<double>(feature_value(rng))});
      y.push_back(x.back()[1] * 3.0 + noise(rng));
    }
    const auto table = table_from(x, y);
    const auto model = train_tree(table, {1, 5, 0.0});  // depth 1: root split only
    const auto oracle = oracle_root_split(table, 5);
    if (oracle.gain <= 0) {
      CHECK(model.nodes[0].is_leaf());
      continue;
    }
    REQUIRE_FALSE(model.nodes[0].is_leaf());
    CHECK(model.nodes[0].feature == static_cast<int>(oracle.feature));
    CHECK_THAT(model.nodes[0].threshold, Catch::Matchers::WithinAbs(oracle.threshold, 1e-9));
    CHECK_THAT(model.importance[oracle.feature],
               Catch::Matchers::WithinRel(oracle.gain, 1e-9));
  }
}

TEST_CASE("train_tree surfaces the top-3 features by importance") {
  std::mt19937_64 rng(31337);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int r = 0; r < 200; ++r) {
    std::vector<double> row = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    // f2 dominates, f0 contributes, the rest is noise.
    y.push_back(10.0 * (row[2] > 5) + 3.0 * (row[0] > 3) + 0.1 * u(rng));
    x.push_back(std::move(row));
  }
  const auto model = train_tree(table_from(x, y), {6, 5, 0.0});
  const auto top = model.top_features(3);
  REQUIRE(top.size() >= 2);
  CHECK(top.size() <= 3);
  CHECK(top[0].first == "f2");
  CHECK(top[1].first == "f0");
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].second >= top[i].second);
}

TEST_CASE("train_tree errors on too few rows") {
  const auto table = table_from({{1}, {2}, {3}}, {1, 2, 3});
  CHECK_THROWS_WITH(train_tree(table, {6, 5, 0.0}),
                    Catch::Matchers::ContainsSubstring("too few rows"));
}

TEST_CASE("tree invariants: split monotonicity, leaf partition, importance conservation") {
  std::mt19937_64 rng(60601);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int r = 0; r < 120; ++r) {
      x.push_back({u(rng), u(rng), u(rng), u(rng)});
      y.push_back(5.0 * x.back()[0] + 2.0 * x.back()[3] + u(rng));
    }
    const auto table = table_from(x, y);
    const TreeHyperparams hp{5, 4, 0.0};
    const auto model = train_tree(table, hp);

    // Split monotonicity: children SSE sum strictly below the parent's.
    for (const auto& node : model.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = model.nodes[static_cast<std::size_t>(node.left)];
      const auto& r = model.nodes[static_cast<std::size_t>(node.right)];
      CHECK(l.sse + r.sse < node.sse);
      CHECK(l.rows + r.rows == node.rows);
      CHECK(l.rows >= hp.min_leaf_rows);
      CHECK(r.rows >= hp.min_leaf_rows);
    }

    // Leaf partition: every row reaches exactly one leaf; counts add up.
    std::size_t leaf_rows = 0;
    double leaf_sse = 0;
    for (const auto& node : model.nodes) {
      if (!node.is_leaf()) continue;
      leaf_rows += node.rows;
      leaf_sse += node.sse;
    }
    CHECK(leaf_rows == table.n_rows());

    // Importance conservation: total gain equals root SSE minus leaf SSE.
    CHECK_THAT(model.total_gain(),
               Catch::Matchers::WithinRel(model.nodes[0].sse - leaf_sse, 1e-6) ||
                   Catch::Matchers::WithinAbs(model.nodes[0].sse - leaf_sse, 1e-9));
    for (double imp : model.importance) CHECK(imp >= 0.0);

    // Leaf means equal the mean of the rows they receive.
    std::vector<std::vector<double>> reached(model.nodes.size());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      int n = 0;
      while (!model.nodes[static_cast<std::size_t>(n)].is_leaf()) {
        const auto& node = model.nodes[static_cast<std::size_t>(n)];
        n = table.feature(r, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left
                                                                                       : node.right;
      }
      reached[static_cast<std::size_t>(n)].push_back(table.target[r]);
    }
    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
      if (!model.nodes[i].is_leaf()) continue;
      REQUIRE(reached[i].size() == model.nodes[i].rows);
      double mean = 0;
      for (double v : reached[i]) mean += v;
      mean /= static_cast<double>(reached[i].size());
      CHECK_THAT(model.nodes[i].mean, Catch::Matchers::WithinRel(mean, 1e-9));
    }
  }
}

TEST_CASE("train_tree is deterministic") {
  std::mt19937_64 rng(8);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 80; ++r) {
    x.push_back({u(rng), u(rng)});
    y.push_back(x.back()[0] + u(rng));
  }
  const auto table = table_from(x, y);
  const auto a = train_tree(table, {4, 3, 0.0});
  const auto b = train_tree(table, {4, 3, 0.0});
  CHECK(tree_to_json(a).dump() == tree_to_json(b).dump());
}

TEST_CASE("predict routes through the tree") {
  SECTION("single leaf predicts its mean") {
    const auto table = table_from({{1}, {2}, {3}, {4}}, {7, 7, 7, 7});
    const auto model = train_tree(table, {6, 2, 0.0});
    CHECK(model.predict(std::vector<double>{123.0}) == 7.0);
  }
  SECTION("left route on the step fixture predicts zero") {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int v = 0; v <= 10; ++v) {
      x.push_back({static_cast<double>(v)});
      y.push_back(v > 5 ? 1.0 : 0.0);
    }
    const auto model = train_tree(table_from(x, y), {6, 2, 0.0});
    CHECK(model.predict(std::vector<double>{0.0}) == 0.0);
    CHECK(model.predict(std::vector<double>{10.0}) == 1.0);
  }
  SECTION("schema mismatch is an error") {
    const auto table = table_from({{1, 2}, {3, 4}, {5, 6}, {7, 8}}, {1, 2, 3, 4});
    const auto model = train_tree(table, {6, 2, 0.0});
    CHECK_THROWS_WITH(model.predict(std::vector<double>{1.0}),
                      Catch::Matchers::ContainsSubstring("schema"));
  }
}

TEST_CASE("training-set SSE never exceeds the constant model's") {
  std::mt19937_64 rng(515);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 60; ++r) {
    x.push_back({u(rng), u(rng)});
    y.push_back(3.0 * x.back()[1] + u(rng));
  }
  const auto table = table_from(x, y);
  const auto model = train_tree(table, {6, 3, 0.0});
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double root_sse = 0, model_sse = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    root_sse += (y[r] - mean) * (y[r] - mean);
    const double err = model.predict(table.row(r)) - y[r];
    model_sse += err * err;
  }
  CHECK(model_sse <= root_sse);
}

TEST_CASE("evaluate metrics and the persistence baseline") {
  SECTION("perfect model has zero RMSE") {
    const auto table = table_from({{1}, {1}, {2}, {2}}, {5, 5, 9, 9});
    const auto model = train_tree(table, {6, 2, 0.0});
    const auto m = evaluate(model, table);
    CHECK(m.rows == 4);
    CHECK(m.rmse == 0.0);
    CHECK(m.mae == 0.0);
  }
  SECTION("constant model RMSE equals the population std of targets") {
    const std::vector<double> targets = {2, 4, 4, 4, 5, 5, 7, 9};
    std::vector<std::vector<double>> x(targets.size(), {1.0});
    const auto table = table_from(x, targets);
    const auto model = train_tree(table, {6, 4, 0.0});  // single leaf: no split possible
    REQUIRE(model.nodes.size() == 1);
    const auto m = evaluate(model, table);
    // Hand arithmetic: mean 5, squared deviations sum 32, population std 2.
    CHECK_THAT(m.rmse, Catch::Matchers::WithinRel(2.0, 1e-12));
  }
  SECTION("persistence baseline on a monotone step-1 series has MAE 1") {
    TrainingTable t;
    t.feature_names = {"f0"};
    for (int i = 0; i < 10; ++i) {
      t.dates.push_back(kMon + Days{i});
      t.features.push_back(0.0);
      t.target.push_back(100.0 + i + 1);          // tomorrow's value
      t.prev_close.push_back(100.0 + i);          // today's value
    }
    const auto model = train_tree(t, {6, 5, 0.0});
    const auto m = evaluate(model, t);
    CHECK(m.baseline_rows == 10);
    CHECK_THAT(m.baseline_mae, Catch::Matchers::WithinRel(1.0, 1e-12));
    CHECK_THAT(m.baseline_rmse, Catch::Matchers::WithinRel(1.0, 1e-12));
  }
  SECTION("empty window is an error") {
    const auto table = table_from({{1}, {2}, {3}, {4}}, {1, 2, 3, 4});
    const auto model = train_tree(table, {6, 2, 0.0});
    const auto window = std::make_pair(*date_from_iso("1999-01-01"), *date_from_iso("1999-01-02"));
    CHECK_THROWS_WITH(evaluate(model, table, window),
                      Catch::Matchers::ContainsSubstring("empty"));
  }
}

TEST_CASE("train_tree honors the training window") {
  // Outside the window the target flips sign; a window-restricted tree sees
  // only the consistent half.
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    x.push_back({static_cast<double>(i % 10)});
    y.push_back(i < 15 ? 1.0 : -1.0);
  }
  auto table = table_from(x, y);
  const auto window = std::make_pair(kMon, kMon + Days{14});
  const auto model = train_tree(table, {3, 2, 0.0}, window);
  CHECK(model.nodes[0].rows == 15);
  CHECK(model.predict(std::vector<double>{0.0}) == 1.0);
}

TEST_CASE("tree json round-trips") {
  std::mt19937_64 rng(123);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 50; ++r) {
    x.push_back({u(rng), u(rng)});
    y.push_back(4.0 * x.back()[0] + u(rng));
  }
  const auto table = table_from(x, y);
  const auto model = train_tree(table, {4, 3, 0.0});
  const auto j = tree_to_json(model);
  const auto back = tree_from_json(nlohmann::json::parse(j.dump()));
  CHECK(tree_to_json(back).dump() == j.dump());
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    CHECK(back.predict(table.row(r)) == model.predict(table.row(r)));
}

TEST_CASE("training table csv round-trips") {
  TrainingTable t;
  t.feature_names = {"a", "b"};
  t.dates = {kMon, kMon + Days{1}};
  t.features = {1.5, 2.0, 3.25, 4.0};
  t.target = {3001.5, 3002.25};
  t.prev_close = {3000.0, std::nullopt};
  std::ostringstream os;
  t.write_csv(os);
  std::istringstream in(os.str());
  const auto back = read_training_csv(in);
  CHECK(back.feature_names == t.feature_names);
  CHECK(back.dates == t.dates);
  CHECK(back.features == t.features);
  CHECK(back.target == t.target);
  CHECK(back.prev_close == t.prev_close);
}
