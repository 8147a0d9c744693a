#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "udset/rng.hpp"
#include "udset/tubes.hpp"

using namespace udset;

TEST_CASE("segment table follows the diagonal pair order", "[tubes]") {
  auto table = build_segment_table(2, 4);
  REQUIRE(table.size() == 4);
  // parents: (0,1), (0,2), (0,3), (1,2), each short enough for one piece
  const int want_i[4] = {0, 0, 0, 1};
  const int want_j[4] = {1, 2, 3, 2};
  for (int m = 0; m < 4; ++m) {
    CHECK(table.pieces[static_cast<size_t>(m)].m == m + 1);
    CHECK(table.pieces[static_cast<size_t>(m)].from_i == want_i[m]);
    CHECK(table.pieces[static_cast<size_t>(m)].from_j == want_j[m]);
    CHECK(table.pieces[static_cast<size_t>(m)].sub == 0);
  }
  CHECK(table.pieces[0].seg.a == Pt{0.0, 0.0});
  CHECK(table.pieces[0].seg.b == Pt{-0.5, -0.5});
  CHECK(table.pieces[3].seg.a == Pt{-0.5, -0.5});
  CHECK(table.pieces[3].seg.b == Pt{-0.5, 0.0});
}

TEST_CASE("segment table invariants at scale", "[tubes]") {
  auto table = build_segment_table(2, 600);
  REQUIRE(table.size() == 600);
  int prev_diag = 0;
  for (int m = 0; m < table.size(); ++m) {
    const auto& p = table.pieces[static_cast<size_t>(m)];
    CHECK(p.m == m + 1);
    CHECK(p.seg.length() <= 1.0 + kBoundaryTol);
    CHECK(p.from_i < p.from_j);
    const int diag = p.from_i + p.from_j;
    CHECK(diag >= prev_diag);
    prev_diag = diag;
    if (m > 0) {
      const auto& q = table.pieces[static_cast<size_t>(m - 1)];
      if (q.from_i == p.from_i && q.from_j == p.from_j)
        CHECK(p.sub == q.sub + 1);  // pieces of one parent stay consecutive
    }
  }
  // determinism
  auto again = build_segment_table(2, 600);
  bool same = true;
  for (int m = 0; m < 600; ++m)
    same &= again.pieces[static_cast<size_t>(m)].seg.a ==
                table.pieces[static_cast<size_t>(m)].seg.a &&
            again.pieces[static_cast<size_t>(m)].seg.b ==
                table.pieces[static_cast<size_t>(m)].seg.b;
  CHECK(same);
}

TEST_CASE("piece radii halve per stage and flush to zero safely", "[tubes]") {
  CHECK(piece_radius(1, 6) == std::ldexp(1.0, -7));
  CHECK(piece_radius(3, 6) == 2.0 * piece_radius(3, 7));
  CHECK(piece_radius(1073, 1) > 0.0);
  CHECK(piece_radius(1074, 1) == 0.0);
  CHECK(piece_radius(4000, 4000) == 0.0);
}

TEST_CASE("tube membership: dense points are inside, far points are not", "[tubes]") {
  auto table = build_segment_table(2, 64);
  auto pts = dense_prefix(2, 6);
  for (int n = 1; n <= 12; n += 3)
    for (const auto& p : pts) CHECK(in_tube(p, table, n));
  CHECK_FALSE(in_tube(Pt{3.0, 0.0}, table, 1));

  // stage nesting: members at stage n+1 are members at stage n
  Rng rng(101);
  int tested = 0;
  for (int trial = 0; trial < 4000 && tested < 300; ++trial) {
    const auto& piece = table.pieces[rng.below(static_cast<uint64_t>(table.size()))];
    const int n = 1 + static_cast<int>(rng.below(10));
    const double r_next = piece_radius(piece.m, n + 1);
    Pt y = rng.in_ball(lerp(piece.seg.a, piece.seg.b, rng.uniform01()), 0.9 * r_next);
    if (!in_tube(y, table, n + 1)) continue;  // landed in a neighbor's shadow? still fine
    CHECK(in_tube(y, table, n));
    ++tested;
  }
  CHECK(tested == 300);
}

TEST_CASE("explicit tube covers", "[tubes]") {
  Rng rng(55);
  for (int k : {1, 4, 8, 16, 64}) {
    Segment seg{Pt{-0.3, 0.2}, Pt{0.55, 0.45}};
    auto balls = cover_tube(seg, k);
    REQUIRE(static_cast<int>(balls.size()) == k);
    for (const auto& b : balls) CHECK(b.radius == 2.0 / k);
    for (int trial = 0; trial < 500; ++trial) {
      Pt y = rng.in_ball(lerp(seg.a, seg.b, rng.uniform01()), 1.0 / k);
      double best = 1e300;
      for (const auto& b : balls) best = std::min(best, dist(y, b.center));
      CHECK(best <= 1.5 / k + kBoundaryTol);
    }
  }
  CHECK_THROWS_AS(cover_tube(Segment{Pt{0.0, 0.0}, Pt{1.5, 0.0}}, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(cover_tube(Segment{Pt{0.0, 0.0}, Pt{0.5, 0.0}}, 0),
                  std::invalid_argument);
}

TEST_CASE("cover sums match brute force and respect the stage bound", "[tubes]") {
  auto table = build_segment_table(2, 10);
  const int n = 2;
  const double r = 1.5;
  auto rep = cover_sum_certificate(table, n, r, 1.0);
  double brute = 0.0;
  for (const auto& piece : table.pieces) {
    const double k = std::ldexp(1.0, piece.m + n);  // exact while m+n <= 52
    brute += k * std::pow(4.0 / k, r);
  }
  CHECK(rep.sum == Catch::Approx(brute).epsilon(1e-13));
  CHECK(rep.ok);
  CHECK(rep.sum < rep.bound);

  // the bound is the infinite-table limit; a long table should approach it
  auto long_rep = cover_sum_certificate(build_segment_table(2, 400), n, r, 1.0);
  CHECK(long_rep.sum <= long_rep.bound);
  CHECK(long_rep.bound - long_rep.sum <= long_rep.bound * 1e-12);
}

TEST_CASE("cover certificate preconditions", "[tubes]") {
  auto table = build_segment_table(2, 8);
  CHECK_THROWS_AS(cover_sum_certificate(table, 2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cover_sum_certificate(table, 2, 1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cover_sum_certificate(table, 1, 1.5, 0.5), std::invalid_argument);
  CHECK_NOTHROW(cover_sum_certificate(table, 1, 1.5, 1.0));
}

TEST_CASE("cover sums shrink as the stage deepens", "[tubes]") {
  auto table = build_segment_table(2, 50);
  double prev = 1e300;
  for (int n : {6, 10, 14}) {
    auto rep = cover_sum_certificate(table, n, 1.5, 1.0);
    CHECK(rep.ok);
    CHECK(rep.sum < prev);
    prev = rep.sum;
  }
}

TEST_CASE("cover report json uses the fixed key set", "[tubes]") {
  auto rep = cover_sum_certificate(build_segment_table(2, 8), 3, 1.5, 1.0);
  json j = cover_report_to_json(rep);
  CHECK(j.size() == 7);
  for (const char* key : {"n", "r", "delta", "M", "sum", "bound", "ok"})
    CHECK(j.contains(key));
  CHECK(j["M"] == 8);
  CHECK(j["ok"] == true);
  CHECK(j["n"] == 3);
}
