#include "support.hpp"

#include "mmkit/errors.hpp"
#include "mmkit/grid_planner.hpp"
#include "mmkit/io.hpp"

#include <doctest.h>

#include <sstream>

using namespace mmkit;
using namespace mmkit::test;

namespace {

bool adjacent(Cell a, Cell b, bool eight) {
  const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  if (dx > 1 || dy > 1 || (dx == 0 && dy == 0)) return false;
  return eight || dx + dy == 1;
}

void checkPathValid(const GridMap& map, const PlanResult& r, Cell s, Cell g, bool eight) {
  REQUIRE(r.found);
  REQUIRE_FALSE(r.path.empty());
  CHECK(r.path.front() == s);
  CHECK(r.path.back() == g);
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    CHECK_FALSE(map.occupied(r.path[i]));
    if (i > 0) CHECK(adjacent(r.path[i - 1], r.path[i], eight));
  }
  CHECK(r.cost == path_cost(r.path));
}

}  // namespace

TEST_SUITE("grid_planner") {
  TEST_CASE("straight run on an empty grid") {
    const GridMap map(5, 5, 1.0);
    const auto r = astar(map, {0, 0}, {0, 4}, Connectivity::Four, Heuristic::Manhattan);
    CHECK(r.found);
    CHECK(r.cost == 4.0);
    CHECK(r.path.size() == 5);
  }

  TEST_CASE("straight diagonal on an empty grid") {
    const GridMap map(5, 5, 1.0);
    const auto r = astar(map, {0, 0}, {4, 4}, Connectivity::Eight, Heuristic::Euclidean);
    CHECK(r.cost == doctest::Approx(4 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.path.size() == 5);
  }

  TEST_CASE("heuristic values") {
    CHECK(heuristic_value(Heuristic::Euclidean, {3, 3}, {3, 3}) == 0.0);
    CHECK(heuristic_value(Heuristic::Manhattan, {3, 3}, {3, 3}) == 0.0);
    CHECK(heuristic_value(Heuristic::Euclidean, {0, 0}, {2, 2}) == doctest::Approx(2 * std::sqrt(2.0)));
    CHECK(heuristic_value(Heuristic::Manhattan, {0, 0}, {2, 2}) == 4.0);
  }

  TEST_CASE("manhattan overestimates on eight-connected grids") {
    const GridMap map(5, 5, 1.0);
    const auto r = astar(map, {0, 0}, {2, 2}, Connectivity::Eight, Heuristic::Euclidean);
    CHECK(r.cost < heuristic_value(Heuristic::Manhattan, {0, 0}, {2, 2}));
  }

  TEST_CASE("start equals goal") {
    const GridMap map(3, 3, 1.0);
    const auto r = astar(map, {1, 1}, {1, 1}, Connectivity::Eight, Heuristic::Euclidean);
    CHECK(r.found);
    CHECK(r.path.size() == 1);
    CHECK(r.cost == 0.0);
  }

  TEST_CASE("walled-off goal is not found") {
    GridMap map(7, 7, 1.0);
    for (int x = 0; x < 7; ++x) map.setOccupied({x, 3});
    const auto r = astar(map, {0, 0}, {6, 6}, Connectivity::Eight, Heuristic::Euclidean);
    CHECK_FALSE(r.found);
    CHECK(r.path.empty());
  }

  TEST_CASE("invalid endpoints") {
    GridMap map(4, 4, 1.0);
    map.setOccupied({2, 2});
    CHECK_THROWS_AS(astar(map, {0, 0}, {2, 2}, Connectivity::Four, Heuristic::Manhattan), InvalidArgument);
    CHECK_THROWS_AS(astar(map, {-1, 0}, {3, 3}, Connectivity::Four, Heuristic::Manhattan), InvalidArgument);
  }

  TEST_CASE("no corner cutting past an occupied cell") {
    GridMap map(3, 3, 1.0);
    map.setOccupied({1, 0});
    const auto r = astar(map, {0, 0}, {1, 1}, Connectivity::Eight, Heuristic::Euclidean);
    REQUIRE(r.found);
    CHECK(r.cost == 2.0);
  }

  TEST_CASE("optimality against the Dijkstra oracle") {
    std::mt19937_64 rng(41);
    struct Pairing {
      Connectivity c;
      Heuristic h;
    };
    for (const auto [conn, heur] : {Pairing{Connectivity::Eight, Heuristic::Euclidean},
                                    Pairing{Connectivity::Four, Heuristic::Manhattan},
                                    Pairing{Connectivity::Four, Heuristic::Euclidean}}) {
      const bool eight = conn == Connectivity::Eight;
      for (int k = 0; k < 30; ++k) {
        const Cell s{0, 0}, g{31, 31};
        const auto map = randomGrid(32, 32, 0.3, rng, s, g);
        const auto oracle = dijkstra(map, g, eight);
        const auto r = astar(map, s, g, conn, heur, true);
        const auto& best = oracle[map.index(s)];
        REQUIRE(r.found == best.has_value());
        if (!r.found) continue;
        CHECK(r.cost == best->value());
        checkPathValid(map, r, s, g, eight);
        // Admissibility audit over every expanded node.
        for (const Cell c : r.expansions) {
          REQUIRE(oracle[map.index(c)]);
          CHECK(heuristic_value(heur, c, g) <= oracle[map.index(c)]->value() + 1e-9);
        }
      }
    }
  }

  TEST_CASE("heuristic dominance on four-connected grids") {
    std::mt19937_64 rng(43);
    for (int k = 0; k < 30; ++k) {
      const Cell s{1, 2}, g{30, 29};
      const auto map = randomGrid(32, 32, 0.25, rng, s, g);
      const auto m = astar(map, s, g, Connectivity::Four, Heuristic::Manhattan);
      const auto e = astar(map, s, g, Connectivity::Four, Heuristic::Euclidean);
      CHECK(m.found == e.found);
      CHECK(m.nodes_expanded <= e.nodes_expanded);
      for (int x = 0; x < 32; x += 5)
        for (int y = 0; y < 32; y += 5)
          CHECK(heuristic_value(Heuristic::Euclidean, {x, y}, g) <= heuristic_value(Heuristic::Manhattan, {x, y}, g));
    }
  }

  TEST_CASE("search is deterministic") {
    std::mt19937_64 rng(47);
    const auto map = randomGrid(32, 32, 0.3, rng, {0, 0}, {31, 31});
    const auto a = astar(map, {0, 0}, {31, 31}, Connectivity::Eight, Heuristic::Manhattan);
    const auto b = astar(map, {0, 0}, {31, 31}, Connectivity::Eight, Heuristic::Manhattan);
    CHECK(a.nodes_expanded == b.nodes_expanded);
    CHECK(a.path == b.path);
  }

  TEST_CASE("time parameterization") {
    const GridMap unit(10, 10, 1.0);
    PlanResult straight;
    straight.found = true;
    straight.path = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}};
    CHECK(time_parameterize(straight, unit, 2.0).duration() == doctest::Approx(2.0));

    PlanResult single;
    single.found = true;
    single.path = {{2, 2}};
    const auto one = time_parameterize(single, unit, 1.0);
    REQUIRE(one.waypoints.size() == 1);
    CHECK(one.waypoints[0].t == 0.0);

    const GridMap half(10, 10, 0.5);
    PlanResult diag;
    diag.found = true;
    diag.path = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const auto d = time_parameterize(diag, half, 1.0);
    CHECK(d.duration() == doctest::Approx(3 * 0.5 * std::sqrt(2.0)).epsilon(1e-12));
    const auto mid = d.at(d.duration() / 2);
    CHECK(mid.x == doctest::Approx(0.75));
    CHECK(mid.y == doctest::Approx(0.75));
    CHECK(mid.heading == doctest::Approx(kPi / 4));

    CHECK_THROWS_AS(time_parameterize(diag, half, 0.0), InvalidArgument);
  }

  TEST_CASE("map parsing") {
    std::istringstream in(
        "{\"schema_version\": 1, \"resolution\": 0.5, \"origin\": [1.0, -2.0]}\n"
        "#..\n"
        "...\n");
    const auto map = parse_map(in, "inline");
    CHECK(map.width() == 3);
    CHECK(map.height() == 2);
    CHECK(map.occupied({0, 1}));
    CHECK_FALSE(map.occupied({0, 0}));
    CHECK(map.worldX({2, 0}) == doctest::Approx(2.0));
    CHECK(map.worldY({0, 1}) == doctest::Approx(-1.5));
    const auto c = map.cellAt(1.9, -1.6);
    REQUIRE(c);
    CHECK(*c == Cell{2, 1});
    CHECK_FALSE(map.cellAt(-5, 0));
  }

  TEST_CASE("map parsing errors name the line") {
    auto fails = [](const std::string& text, const std::string& needle) {
      std::istringstream in(text);
      try {
        parse_map(in, "bad.map");
      } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
        return;
      }
      FAIL("expected ConfigError");
    };
    fails("{\"schema_version\": 1, \"resolution\": 1, \"origin\": [0, 0]}\n..\n...\n", "bad.map:3");
    fails("{\"schema_version\": 1, \"resolution\": 1, \"origin\": [0, 0]}\n.x\n", "bad.map:2");
    fails("{\"schema_version\": 2, \"resolution\": 1, \"origin\": [0, 0]}\n..\n", "schema_version");
    fails("not json\n..\n", "bad.map:1");
    fails("{\"schema_version\": 1, \"resolution\": 1, \"origin\": [0, 0]}\n", "bad.map");
  }

  TEST_CASE("shipped map has a path between the scenario goals") {
    const auto map = load_map(configPath("warehouse.map"));
    const auto s = map.cellAt(1.0, 1.0), g = map.cellAt(6.0, 5.0);
    REQUIRE(s);
    REQUIRE(g);
    const auto oracle = dijkstra(map, *g, true);
    for (Heuristic h : {Heuristic::Manhattan, Heuristic::Euclidean}) {
      const auto r = astar(map, *s, *g, Connectivity::Eight, h);
      REQUIRE(r.found);
      CHECK(r.cost >= oracle[map.index(*s)]->value());
    }
    CHECK(astar(map, *s, *g, Connectivity::Eight, Heuristic::Euclidean).cost == oracle[map.index(*s)]->value());
  }
}
