#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "opensense/rng.hpp"
#include "opensense/sched.hpp"

using namespace opensense;

namespace {

// Independent oracle: exhaustively test every candidate period against the
// n-subinterval slack condition.
bool oracle_feasible(const std::vector<int>& durations, int t_sp, int cl_s) {
  for (int d : durations) {
    const int n = (d + t_sp - 1) / t_sp;
    if (n * t_sp - d > cl_s) return false;
  }
  return true;
}

std::optional<int> oracle_clpa(const std::vector<int>& durations, int cl_s) {
  if (durations.empty()) return std::nullopt;
  const int base = *std::min_element(durations.begin(), durations.end());
  std::optional<int> best;
  for (int t = 2; t <= base; ++t)
    if (oracle_feasible(durations, t, cl_s)) best = t;
  return best;
}

ClassCatalog catalog_with(std::vector<int> cls) {
  ClassCatalog cat;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    cat.names.push_back("c" + std::to_string(i));
    cat.cl_s.push_back(cls[i]);
  }
  return cat;
}

}  // namespace

TEST_CASE("clpa_assign matches the exhaustive oracle on the worked cases") {
  CHECK(clpa_assign({10, 10, 10}, 2) == 10);
  CHECK(clpa_assign({6, 10}, 1) == oracle_clpa({6, 10}, 1));
  CHECK(clpa_assign({6, 10}, 1) == 2);
  CHECK(clpa_assign({3}, 0) == 3);
  CHECK(clpa_assign({}, 1) == std::nullopt);
  // No period in [2, min] can satisfy slack 0 for coprime durations.
  CHECK(clpa_assign({7, 11}, 0) == std::nullopt);
  CHECK_THROWS(clpa_assign({0, 5}, 1));
}

TEST_CASE("clpa_assign feasibility and maximality over random interval sets") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int count = rng.uniform_int(1, 15);
    std::vector<int> durations;
    for (int i = 0; i < count; ++i) durations.push_back(rng.uniform_int(1, 200));
    const int cl_s = rng.uniform_int(0, 5);

    const auto got = clpa_assign(durations, cl_s);
    const auto expected = oracle_clpa(durations, cl_s);
    CHECK(got == expected);
    if (got) {
      CHECK(oracle_feasible(durations, *got, cl_s));
      const int base = *std::min_element(durations.begin(), durations.end());
      for (int t = *got + 1; t <= base; ++t) CHECK_FALSE(oracle_feasible(durations, t, cl_s));
    }
  }
}

TEST_CASE("min_interval_assign picks per-class minima") {
  std::vector<EventInterval> ivs = {{0, 0, 5}, {0, 5, 30}, {1, 35, 800}};
  const auto pa = min_interval_assign(ivs);
  CHECK(pa.decide(0) == 5);
  CHECK(pa.decide(1) == 800);
  CHECK(pa.decide(7) == 1);  // unobserved class: fixed fallback
}

TEST_CASE("clpa_decide returns stored periods with fallback 1") {
  PeriodAssignment pa;
  pa.period_by_class[5] = 33;
  pa.period_by_class[2] = 2;
  CHECK(pa.decide(5) == 33);
  CHECK(pa.decide(2) == 2);
  CHECK(pa.decide(9) == 1);
}

TEST_CASE("take_action rewards and cursor bookkeeping") {
  // Trace: class 2 for 20s, then class 0 for 30s.
  EventTrace trace;
  trace.num_classes = 3;
  trace.class_ids.assign(20, 2);
  trace.class_ids.insert(trace.class_ids.end(), 30, 0);
  const auto catalog = catalog_with({2, 2, 2});
  const RewardWeights w;

  SUBCASE("event continues, period kept") {
    TraceCursor cursor(trace);
    CHECK(cursor.t_ideal() == 20);
    const auto out = qlbs_take_action(cursor, {2, 5}, 5, w, catalog);
    CHECK(out.reward == doctest::Approx(1.0));
    CHECK_FALSE(out.boundary_crossed);
    CHECK(out.next.class_id == 2);
    CHECK(out.next.prev_period == 5);
    CHECK(cursor.t_ideal() == 15);
  }

  SUBCASE("event continues, period shortened") {
    TraceCursor cursor(trace);
    const auto out = qlbs_take_action(cursor, {2, 9}, 4, w, catalog);
    CHECK(out.reward == doctest::Approx(-5.0));
  }

  SUBCASE("boundary crossed outside CL_s") {
    EventTrace t2;
    t2.num_classes = 2;
    t2.class_ids.assign(25, 1);
    t2.class_ids.insert(t2.class_ids.end(), 50, 0);
    TraceCursor cursor(t2);
    const auto out = qlbs_take_action(cursor, {1, 1}, 30, w, catalog);
    CHECK(out.boundary_crossed);
    CHECK(out.reward == doctest::Approx(-50.0));  // slack 5 > CL_s 2
    CHECK(out.next.class_id == 0);
  }

  SUBCASE("exact boundary has zero slack") {
    EventTrace t2;
    t2.num_classes = 2;
    t2.class_ids.assign(25, 1);
    t2.class_ids.insert(t2.class_ids.end(), 50, 0);
    const auto cat0 = catalog_with({0, 0});
    TraceCursor cursor(t2);
    const auto out = qlbs_take_action(cursor, {1, 1}, 25, w, cat0);
    CHECK(out.reward == doctest::Approx(10.0));
  }

  SUBCASE("invalid action") {
    TraceCursor cursor(trace);
    CHECK_THROWS(qlbs_take_action(cursor, {2, 1}, 0, w, catalog));
  }
}

TEST_CASE("single Q-update moves the cell exactly as expected") {
  // With zero next-state values the update is (1-a)Q + a*r.
  EventTrace trace;
  trace.num_classes = 1;
  trace.class_ids.assign(10, 0);
  const auto catalog = catalog_with({100});  // every boundary within CL_s
  TrainConfig cfg;
  cfg.episodes = 1;
  cfg.epsilon = 0.0;  // greedy: zero table ties break to action 1
  cfg.alpha = 0.3;
  cfg.gamma = 0.6;
  cfg.max_action = 4;
  cfg.seed = 9;
  const auto result = qlbs_train(trace, catalog, cfg, RewardWeights{});
  // First step from state (0, prev=1), action 1, reward +1 (1 >= prev 1),
  // next-state row still zero at update time.
  CHECK(result.table.at({0, 1}, 1) > 0.0);
}

TEST_CASE("qlbs_train runs and terminates as configured") {
  const auto trace_cfg = kitchen_profile();
  const auto trace = generate_trace(17, 800, trace_cfg);
  const auto catalog = catalog_with({2, 2, 2, 2, 2, 2});

  SUBCASE("zero episodes returns the input table unchanged") {
    QTable old(6, 10);
    old.at({3, 2}, 4) = 7.5;
    TrainConfig cfg;
    cfg.episodes = 0;
    cfg.max_action = 10;
    const auto result = qlbs_train(trace, catalog, cfg, RewardWeights{}, &old);
    CHECK(result.episodes_run == 0);
    CHECK(result.table.at({3, 2}, 4) == doctest::Approx(7.5));
  }

  SUBCASE("update mode with infinite theta stops after n_success episodes") {
    QTable old(6, 10);
    TrainConfig cfg;
    cfg.episodes = 100;
    cfg.max_action = 10;
    cfg.update_mode = true;
    cfg.theta = 1e18;
    cfg.n_success = 1;
    cfg.seed = 3;
    const auto result = qlbs_train(trace, catalog, cfg, RewardWeights{}, &old);
    CHECK(result.episodes_run == 1);
  }

  SUBCASE("training is seed-deterministic") {
    TrainConfig cfg;
    cfg.episodes = 20;
    cfg.max_action = 30;
    cfg.seed = 77;
    const auto a = qlbs_train(trace, catalog, cfg, RewardWeights{});
    const auto b = qlbs_train(trace, catalog, cfg, RewardWeights{});
    CHECK(a.avg_penalty == b.avg_penalty);
    for (int cls = 0; cls < 6; ++cls)
      for (int prev = 1; prev <= 30; ++prev)
        for (int act = 1; act <= 30; ++act)
          CHECK(a.table.at({cls, prev}, act) == b.table.at({cls, prev}, act));
  }

  SUBCASE("invalid configurations") {
    EventTrace empty;
    TrainConfig cfg;
    CHECK_THROWS(qlbs_train(empty, catalog, cfg, RewardWeights{}));
    TrainConfig bad;
    bad.max_action = 0;
    CHECK_THROWS(qlbs_train(trace, catalog, bad, RewardWeights{}));
    TrainConfig upd;
    upd.update_mode = true;
    CHECK_THROWS(qlbs_train(trace, catalog, upd, RewardWeights{}));
  }
}

TEST_CASE("qlbs_decide argmax with smallest-index tie-break") {
  QTable q(2, 40);
  CHECK(qlbs_decide(q, {0, 1}) == 1);  // all-zero row

  q.at({1, 3}, 33) = 2.5;
  CHECK(qlbs_decide(q, {1, 3}) == 33);

  // Argmax is invariant under adding a constant to the whole row.
  QTable shifted = q;
  for (int a = 1; a <= 40; ++a) shifted.at({1, 3}, a) += 100.0;
  CHECK(qlbs_decide(shifted, {1, 3}) == qlbs_decide(q, {1, 3}));

  CHECK(qlbs_decide(q, {-1, 1}) == 1);  // unknown class fallback
  CHECK(qlbs_decide(q, {0, 99}) == 1);  // out-of-range prev period
}

TEST_CASE("Q-table file round-trip is lossless") {
  QTable q(3, 7);
  SplitMix64 rng(5);
  for (int cls = 0; cls < 3; ++cls)
    for (int prev = 1; prev <= 7; ++prev)
      for (int act = 1; act <= 7; ++act)
        q.at({cls, prev}, act) = rng.normal(0.0, 13.0);

  const auto path = std::filesystem::temp_directory_path() / "opensense_qtable.txt";
  q.save(path.string());
  const auto back = QTable::load(path.string());
  REQUIRE(back.num_classes() == 3);
  REQUIRE(back.max_action() == 7);
  for (int cls = 0; cls < 3; ++cls)
    for (int prev = 1; prev <= 7; ++prev)
      for (int act = 1; act <= 7; ++act)
        CHECK(back.at({cls, prev}, act) == q.at({cls, prev}, act));
  std::filesystem::remove(path);
}

TEST_CASE("assignment CSV round-trips") {
  PeriodAssignment pa;
  pa.period_by_class = {{0, 10}, {1, 5}, {5, 33}};
  const auto path = std::filesystem::temp_directory_path() / "opensense_assign.csv";
  write_assignment_csv(path.string(), pa);
  const auto back = read_assignment_csv(path.string());
  CHECK(back.period_by_class == pa.period_by_class);
  std::filesystem::remove(path);
}
