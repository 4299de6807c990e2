#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "eigperturb/branches.hpp"
#include "oracles.hpp"

using namespace eigperturb;
using namespace eigperturb::branches;
using geometry::DomainSpec;
using geometry::PerturbFamily;
using linalg::Matrix;
using linalg::Vec3;
using Catch::Approx;

namespace {

// Build a table directly from closed-form branch functions; this exercises
// the slope estimator without any FEM solves.
BranchTable synthetic_table(double lambda0, const std::vector<std::function<double(double)>>& fns,
                            std::vector<double> grid = {-2e-3, -1e-3, 0.0, 1e-3, 2e-3}) {
  BranchTable t;
  t.lambda0 = lambda0;
  t.window = 0.25 * lambda0;
  t.t_grid = std::move(grid);
  t.mesh_levels = {8, 16};
  t.cluster_size = static_cast<int>(fns.size());
  const int nt = static_cast<int>(t.t_grid.size());
  t.extrapolated.assign(fns.size(), std::vector<double>(nt));
  t.uncertainty.assign(fns.size(), std::vector<double>(nt, 0.0));
  t.branch_index.assign(fns.size(), std::vector<int>(nt, 0));
  for (size_t b = 0; b < fns.size(); ++b)
    for (int i = 0; i < nt; ++i) t.extrapolated[b][i] = fns[b](t.t_grid[i]);
  return t;
}
}  // namespace

TEST_CASE("estimate_slopes on an exact line") {
  const auto table = synthetic_table(10.0, {[](double t) { return 10.0 - 3.0 * t; }});
  const auto slopes = estimate_slopes(table);
  REQUIRE(slopes.size() == 1);
  CHECK(slopes[0].slope == Approx(-3.0).margin(1e-11));
}

TEST_CASE("estimate_slopes on the exact dilation branch") {
  const double lambda0 = 14.681970642123893;
  const auto table =
      synthetic_table(lambda0, {[=](double t) { return lambda0 / ((1.0 + t) * (1.0 + t)); }});
  const auto slopes = estimate_slopes(table);
  // Richardson over h and 2h removes the quadratic error term; the Taylor
  // remainder at h = 1e-3 is ~ 4 lambda0 h^3.
  CHECK(slopes[0].slope == Approx(-2.0 * lambda0).margin(1e-6));
}

TEST_CASE("estimate_slopes on a constant branch") {
  const auto table = synthetic_table(5.0, {[](double) { return 5.0; }});
  CHECK(estimate_slopes(table)[0].slope == Approx(0.0).margin(1e-12));
}

TEST_CASE("estimate_slopes requires two symmetric pairs") {
  const auto table = synthetic_table(5.0, {[](double t) { return 5.0 + t; }},
                                     {-1e-3, 0.0, 1e-3});
  CHECK_THROWS_AS(estimate_slopes(table), BranchError);
}

TEST_CASE("compare pass, zero-slope pass, and count mismatch") {
  Matrix a2 = Matrix(2, 2);
  a2(0, 0) = 1.0;
  a2(1, 1) = 3.0;
  const Matrix id2 = Matrix::identity(2);

  hadamard::SlopePrediction pred;
  pred.lambda0 = 10.0;
  pred.roots = {{1.0, true, -1.0}, {3.0, true, -3.0}};

  std::vector<SlopeEstimate> meas = {{0, -0.999, 1e-3}, {1, -3.002, 1e-3}};
  auto rep = compare(pred, meas, 0.0, 1e-2, a2, id2);
  CHECK(rep.pass);
  CHECK(rep.matches[0].pass);
  CHECK(rep.matches[1].pass);
  CHECK(rep.sum_rule.trace_target == Approx(-4.0));

  // Translation: predictions {0, 0} against tiny measured slopes, absolute
  // tolerance only.
  hadamard::SlopePrediction zero;
  zero.lambda0 = 10.0;
  zero.roots = {{0.0, true, 0.0}, {0.0, true, 0.0}};
  std::vector<SlopeEstimate> tiny = {{0, 1e-6, 1e-5}, {1, -2e-6, 1e-5}};
  const Matrix a0(2, 2);
  auto rep0 = compare(zero, tiny, 1e-4, 0.0, a0, id2);
  CHECK(rep0.pass);

  // One simple prediction but two measured distinct slopes: diagnostic fail.
  hadamard::SlopePrediction one;
  one.lambda0 = 10.0;
  one.roots = {{1.0, true, -1.0}};
  auto repc = compare(one, meas, 1e-3, 1e-2, a2, id2);
  CHECK(!repc.pass);
  CHECK(!repc.counts_ok);
  CHECK(!repc.diagnostic.empty());
}

TEST_CASE("compare flags an unresolved cluster") {
  // Distinct predictions but measured slopes collapsed onto their mean: the
  // resolution diagnostic names the cause.
  hadamard::SlopePrediction pred;
  pred.lambda0 = 10.0;
  pred.roots = {{1.0, true, -1.0}, {3.0, true, -3.0}};
  std::vector<SlopeEstimate> meas = {{0, -2.0001, 1e-4}, {1, -1.9999, 1e-4}};
  Matrix a = Matrix(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 3.0;
  auto rep = compare(pred, meas, 0.0, 1e-2, a, Matrix::identity(2));
  CHECK(!rep.pass);
  CHECK(rep.diagnostic.find("cannot separate") != std::string::npos);
}

TEST_CASE("compare reports informational matches for multiple roots") {
  hadamard::SlopePrediction pred;
  pred.lambda0 = 10.0;
  pred.roots = {{20.0, false, -20.0}, {20.0, false, -20.0}};
  std::vector<SlopeEstimate> meas = {{0, -19.99, 0.05}, {1, -20.01, 0.05}};
  Matrix a = Matrix::identity(2) * 20.0;
  auto rep = compare(pred, meas, 1e-3, 1e-2, a, Matrix::identity(2));
  REQUIRE(rep.matches.size() == 2);
  CHECK(rep.matches[0].informational);
  CHECK(rep.matches[1].informational);
  CHECK(rep.counts_ok);
  CHECK(rep.sum_rule.pass);  // -trace = -40 vs measured sum -40.0 +- 0.1
  CHECK(rep.pass);
}

TEST_CASE("translation family yields flat branches (FEM)") {
  const auto domain = DomainSpec::unit_disk();
  const auto family = PerturbFamily::translation({0.4, -0.2, 0.0});
  BranchOptions opts;
  opts.mesh_levels = {8, 16};
  opts.expected_dim = 2;
  const double lambda0 = 14.681970642123893;
  const auto table = sample_branches(domain, family, lambda0, opts);
  CHECK(table.cluster_size == 2);
  const auto slopes = estimate_slopes(table);
  for (const auto& s : slopes) CHECK(std::abs(s.slope) <= 1e-4 * lambda0);
}

TEST_CASE("dilation family reproduces the exact scaling branch (FEM)") {
  const auto domain = DomainSpec::unit_disk();
  const auto family = PerturbFamily::dilation(1.0);
  BranchOptions opts;
  opts.mesh_levels = {8, 16, 32};
  opts.expected_dim = 2;
  const double lambda0 = 14.681970642123893;
  const auto table = sample_branches(domain, family, lambda0, opts);

  // Every branch equals lambda_h(0) / (1+t)^2 pointwise, and the
  // extrapolated values track lambda0 / (1+t)^2 within the extrapolation
  // uncertainty of the ladder.
  const int zero_ti = table.t_index(0.0);
  for (int b = 0; b < table.cluster_size; ++b) {
    for (size_t ti = 0; ti < table.t_grid.size(); ++ti) {
      const double t = table.t_grid[ti];
      const double expect = table.extrapolated[b][zero_ti] / ((1.0 + t) * (1.0 + t));
      REQUIRE(table.extrapolated[b][ti] == Approx(expect).margin(5e-7 * table.lambda0));
    }
  }
  const auto slopes = estimate_slopes(table);
  for (const auto& s : slopes)
    CHECK(s.slope == Approx(-2.0 * lambda0).epsilon(2e-3));
}

TEST_CASE("slope estimates are antisymmetric under family reversal (FEM)") {
  const auto domain = DomainSpec::unit_disk();
  const auto forward = PerturbFamily::holomorphic_poly({{3, {1.0, 0.0}}});
  const PerturbFamily reversed(
      "reversed", [&](double t, const Vec3& x) { return forward.map(-t, x); },
      [&](const Vec3& x) { return -1.0 * forward.velocity(x); }, forward.t_min(),
      forward.t_max());

  BranchOptions opts;
  opts.mesh_levels = {8, 16};
  opts.expected_dim = 2;
  const double lambda0 = 14.681970642123893;
  const auto sf = estimate_slopes(sample_branches(domain, forward, lambda0, opts));
  const auto sr = estimate_slopes(sample_branches(domain, reversed, lambda0, opts));
  REQUIRE(sf.size() == sr.size());
  // Compare as multisets: sorted forward slopes vs sorted negated reversed.
  std::vector<double> f, r;
  for (const auto& s : sf) f.push_back(s.slope);
  for (const auto& s : sr) r.push_back(-s.slope);
  std::sort(f.begin(), f.end());
  std::sort(r.begin(), r.end());
  for (size_t i = 0; i < f.size(); ++i)
    CHECK(f[i] == Approx(r[i]).margin(sf[i].uncertainty + sr[i].uncertainty));
}

TEST_CASE("sum rule holds on the cubic disk scenario (FEM)") {
  const auto domain = DomainSpec::unit_disk();
  const auto family = PerturbFamily::holomorphic_poly({{3, {1.0, 0.0}}});
  const auto space = modes::disk_eigenspace(1, 1);
  const auto pencil = hadamard::assemble_quadrature(
      space, geometry::normal_speed(domain, family));
  const auto pred = hadamard::predict_slopes(pencil);

  BranchOptions opts;
  opts.mesh_levels = {8, 16, 32};
  opts.expected_dim = 2;
  const auto table = sample_branches(domain, family, space.lambda0, opts);
  const auto slopes = estimate_slopes(table);
  const auto rep = compare(pred, slopes, 0.0, 0.05, pencil.A, pencil.B);
  CHECK(rep.sum_rule.pass);
  CHECK(rep.counts_ok);
  // Mesh-ladder slopes at n = 32 already sit within a few percent of the
  // predicted +-lambda0.
  CHECK(rep.pass);
}

TEST_CASE("extrapolation uncertainty shrinks as the ladder is extended") {
  const auto domain = DomainSpec::unit_disk();
  const auto family = PerturbFamily::holomorphic_poly({{3, {1.0, 0.0}}});
  const double lambda0 = 14.681970642123893;

  auto mean_uncertainty = [&](std::vector<int> ladder) {
    BranchOptions opts;
    opts.mesh_levels = std::move(ladder);
    opts.expected_dim = 2;
    const auto table = sample_branches(domain, family, lambda0, opts);
    double acc = 0.0;
    int cnt = 0;
    for (const auto& row : table.uncertainty)
      for (double u : row) {
        acc += u;
        ++cnt;
      }
    return acc / cnt;
  };
  const double short_ladder = mean_uncertainty({8, 16, 32});
  const double long_ladder = mean_uncertainty({8, 16, 32, 64});
  CHECK(long_ladder < short_ladder);
}

TEST_CASE("window multiplicity mismatch raises") {
  const auto domain = DomainSpec::unit_disk();
  BranchOptions opts;
  opts.mesh_levels = {8, 16};
  opts.expected_dim = 3;  // the k=1 cluster is two-dimensional
  CHECK_THROWS_AS(
      sample_branches(domain, PerturbFamily::dilation(1.0), 14.681970642123893, opts),
      BranchError);
}

TEST_CASE("branches CSV format") {
  const auto domain = DomainSpec::unit_disk();
  BranchOptions opts;
  opts.mesh_levels = {8, 16};
  opts.expected_dim = 2;
  const auto table =
      sample_branches(domain, PerturbFamily::dilation(1.0), 14.681970642123893, opts);
  std::ostringstream out;
  write_branches_csv(out, table);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,mesh_level,branch_id,lambda,extrapolated_lambda");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == static_cast<int>(table.t_grid.size()) * 2 * table.cluster_size);
}
