#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sgvar/energy.hpp"

using namespace sgvar;
using sgvar::test::Instance;
using sgvar::test::coordinate_field;
using sgvar::test::random_dirichlet;
using sgvar::test::random_full;

TEST_CASE("energy of constants vanishes") {
  const Instance inst(3, 2);
  CHECK(energy(inst.form, constant_field(inst.graph, 4.2)) == 0.0);
}

TEST_CASE("the coordinate on the interval has unit energy at every level") {
  for (int m = 0; m <= 6; ++m) {
    const Instance inst(2, m);
    CHECK(std::abs(energy(inst.form, coordinate_field(inst.graph, 0)) - 1.0) <= 1e-13);
  }
}

TEST_CASE("corner indicator at level zero") {
  const Instance inst(3, 0);
  Field u = zero_field(inst.graph, false);
  u.values[inst.graph.boundary()[0]] = 1.0;
  CHECK(energy(inst.form, u) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("bilinear form: symmetry, constants, polarization") {
  const Instance inst(3, 3);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Field u = random_full(inst.graph, rng);
    const Field v = random_full(inst.graph, rng);
    CHECK(energy_inner(inst.form, u, u) ==
          doctest::Approx(energy(inst.form, u)).epsilon(1e-14));
    CHECK(std::abs(energy_inner(inst.form, u, constant_field(inst.graph, 2.0))) <= 1e-11);
    Field sum = u, diff = u;
    sum.values += v.values;
    diff.values -= v.values;
    const double pol = (energy(inst.form, sum) - energy(inst.form, diff)) / 4.0;
    CHECK(pol == doctest::Approx(energy_inner(inst.form, u, v)).epsilon(1e-12));
  }
}

TEST_CASE("quadratic form consistency with the stiffness matrix") {
  const Instance inst(3, 4);
  std::mt19937_64 rng(17);
  for (int t = 0; t < 30; ++t) {
    const Field u = random_full(inst.graph, rng);
    const double quad = u.values.dot(inst.form.stiffness * u.values);
    CHECK(quad == doctest::Approx(energy(inst.form, u)).epsilon(1e-12));
  }
}

TEST_CASE("graph Laplacian point values") {
  SUBCASE("constants are harmonic") {
    const Instance inst(3, 2);
    const Field u = constant_field(inst.graph, 3.0);
    for (std::int64_t v = 0; v < inst.graph.vertex_count(); ++v)
      CHECK(graph_laplacian(inst.graph, u, static_cast<VertexId>(v)) == 0.0);
  }
  SUBCASE("second differences of x(1-x) are exactly -2 after renormalization") {
    for (int m : {2, 4, 6}) {
      const Instance inst(2, m);
      Field u = coordinate_field(inst.graph, 0);
      for (std::int64_t v = 0; v < inst.graph.vertex_count(); ++v)
        u.values[v] = u.values[v] * (1.0 - u.values[v]);
      for (std::int64_t v = 0; v < inst.graph.vertex_count(); ++v) {
        if (inst.graph.is_boundary(static_cast<VertexId>(v))) continue;
        CHECK(standard_laplacian(inst.graph, u, static_cast<VertexId>(v)) ==
              doctest::Approx(-2.0).epsilon(1e-9));
      }
    }
  }
  SUBCASE("an isolated midpoint bump sees its degree") {
    const Instance inst(3, 1);
    VertexId midpoint = -1;
    for (std::int64_t v = 0; v < inst.graph.vertex_count(); ++v)
      if (!inst.graph.is_boundary(static_cast<VertexId>(v))) midpoint = static_cast<VertexId>(v);
    Field u = zero_field(inst.graph, true);
    u.values[midpoint] = 1.0;
    CHECK(graph_laplacian(inst.graph, u, midpoint) == doctest::Approx(-4.0).epsilon(1e-15));
  }
}

TEST_CASE("harmonic extension") {
  SUBCASE("the corner unit datum yields the 2/5-2/5-1/5 midpoints and keeps energy 2") {
    const LevelGraph g0 = build_gasket(3, 0);
    const Refinement r = refine(g0);
    const EnergyForm e0 = make_energy_form(g0);
    const EnergyForm e1 = make_energy_form(r.graph);
    Field u = zero_field(g0, false);
    u.values[g0.boundary()[0]] = 1.0;
    const Field ext = harmonic_extension(g0, r, u);

    auto midpoint_value = [&](int a, int b) {
      std::vector<std::int64_t> bary(3, 0);
      bary[a] = 1;
      bary[b] = 1;
      return ext.values[r.graph.find_vertex(bary)];
    };
    CHECK(midpoint_value(0, 1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(midpoint_value(0, 2) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(midpoint_value(1, 2) == doctest::Approx(0.2).epsilon(1e-14));

    const double w0 = energy(e0, u);
    const double w1 = energy(e1, ext);
    CHECK(w0 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(w1 - w0) <= 1e-12);
  }

  SUBCASE("constants extend to constants with zero energy") {
    const LevelGraph g = build_gasket(4, 1);
    const Refinement r = refine(g);
    const Field ext = harmonic_extension(g, r, constant_field(g, 7.0));
    CHECK((ext.values.array() == 7.0).all());
    CHECK(energy(make_energy_form(r.graph), ext) == 0.0);
  }

  SUBCASE("on the interval the extension is linear interpolation") {
    const LevelGraph g = build_gasket(2, 2);
    const Refinement r = refine(g);
    std::mt19937_64 rng(23);
    const Field u = random_full(g, rng);
    const Field ext = harmonic_extension(g, r, u);
    for (const Cell& cell : g.cells()) {
      std::vector<std::int64_t> mid(2);
      auto a = g.bary(cell.members[0]);
      auto b = g.bary(cell.members[1]);
      for (int k = 0; k < 2; ++k) mid[k] = a[k] + b[k];
      const double expected = 0.5 * (u.values[cell.members[0]] + u.values[cell.members[1]]);
      CHECK(ext.values[r.graph.find_vertex(mid)] ==
            doctest::Approx(expected).epsilon(1e-14));
    }
    CHECK(std::abs(energy(make_energy_form(r.graph), ext) - energy(make_energy_form(g), u)) <=
          1e-12);
  }

  SUBCASE("energy is preserved and minimal among random competitors") {
    for (int N : {2, 3, 4}) {
      const LevelGraph g = build_gasket(N, 2);
      const Refinement r = refine(g);
      const EnergyForm e = make_energy_form(g);
      const EnergyForm ef = make_energy_form(r.graph);
      std::mt19937_64 rng(31 + N);
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int t = 0; t < 10; ++t) {
        const Field u = random_full(g, rng);
        const Field ext = harmonic_extension(g, r, u);
        const double w0 = energy(e, u);
        const double w1 = energy(ef, ext);
        CHECK(std::abs(w1 - w0) <= 1e-12 * std::max(1.0, w0));
        for (int k = 0; k < 100; ++k) {
          Field pert = ext;
          for (std::int64_t v = 0; v < r.graph.vertex_count(); ++v)
            pert.values[v] += 0.05 * dist(rng);
          for (std::int64_t v = 0; v < g.vertex_count(); ++v)
            pert.values[r.old_to_new[v]] = u.values[v];
          CHECK(energy(ef, pert) >= w1 - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("Holder quotient and the sup-norm embedding") {
  SUBCASE("zero field") {
    const Instance inst(3, 2);
    const HolderReport rep = holder_check(inst.form, zero_field(inst.graph, true));
    CHECK(rep.quotient == 0.0);
    CHECK(rep.bound == 0.0);
    CHECK(rep.ok);
    CHECK(rep.sup_ok);
  }
  SUBCASE("the interval exponent is exactly one half") {
    CHECK(holder_exponent(2) == 0.5);
  }
  SUBCASE("pruned maximum equals the exhaustive pair maximum") {
    for (int N : {2, 3}) {
      const Instance inst(N, 3);
      const double sigma = holder_exponent(N);
      const double pow4m = std::pow(4.0, inst.graph.level());
      std::mt19937_64 rng(101 + N);
      for (int t = 0; t < 50; ++t) {
        const Field u = random_dirichlet(inst.graph, rng);
        double brute = 0.0;
        for (std::int64_t i = 0; i < inst.graph.vertex_count(); ++i)
          for (std::int64_t j = i + 1; j < inst.graph.vertex_count(); ++j) {
            const double d2 =
                inst.graph.squared_offset(static_cast<VertexId>(i), static_cast<VertexId>(j)) /
                (2.0 * pow4m);
            brute = std::max(brute, std::abs(u.values[i] - u.values[j]) /
                                        std::pow(d2, sigma / 2.0));
          }
        const HolderReport rep = holder_check(inst.form, u);
        CHECK(rep.quotient == doctest::Approx(brute).epsilon(1e-12));
      }
    }
  }
  SUBCASE("a thousand random Dirichlet fields satisfy the bound at N=3, m=4") {
    const Instance inst(3, 4);
    std::mt19937_64 rng(42);
    for (int t = 0; t < 1000; ++t) {
      const HolderReport rep = holder_check(inst.form, random_dirichlet(inst.graph, rng));
      CHECK(rep.ok);
      CHECK(rep.sup_ok);
    }
  }
}

TEST_CASE("Lipschitz truncation") {
  const Instance inst(3, 3);
  std::mt19937_64 rng(7);
  SUBCASE("identity leaves energy unchanged") {
    const Field u = random_dirichlet(inst.graph, rng);
    CHECK(energy(inst.form, truncate(u, lipschitz_identity())) ==
          doctest::Approx(energy(inst.form, u)).epsilon(1e-15));
  }
  SUBCASE("the unit truncation never raises energy") {
    for (int t = 0; t < 100; ++t) {
      const Field u = random_dirichlet(inst.graph, rng);
      CHECK(energy(inst.form, truncate(u, lipschitz_unit_truncation())) <=
            energy(inst.form, u) * (1.0 + 1e-14));
    }
  }
  SUBCASE("doubling scales energy by exactly four") {
    const Field u = random_dirichlet(inst.graph, rng);
    CHECK(energy(inst.form, truncate(u, lipschitz_scale(2.0))) ==
          doctest::Approx(4.0 * energy(inst.form, u)).epsilon(1e-14));
  }
  SUBCASE("maps with h(0) != 0 are rejected on Dirichlet fields") {
    const LipschitzFn shifted{[](double t) { return t + 1.0; }, 1.0, "shift"};
    CHECK_THROWS_AS(truncate(random_dirichlet(inst.graph, rng), shifted), ConfigError);
    Field free = random_full(inst.graph, rng);
    CHECK_NOTHROW(truncate(free, shifted));
  }
}

TEST_CASE("starred norm") {
  const Instance inst(3, 1);
  std::mt19937_64 rng(13);
  const Field zero_a = constant_field(inst.graph, 0.0);
  const Field minus_one = constant_field(inst.graph, -1.0);

  SUBCASE("a = 0 reduces to the energy norm") {
    const Field u = random_dirichlet(inst.graph, rng);
    CHECK(starred_norm(inst.form, inst.weights, u, zero_a) ==
          doctest::Approx(std::sqrt(energy(inst.form, u))).epsilon(1e-14));
  }
  SUBCASE("zero field has zero starred norm") {
    CHECK(starred_norm(inst.form, inst.weights, zero_field(inst.graph, true), minus_one) == 0.0);
  }
  SUBCASE("a = -1 adds the weighted square sum") {
    for (int t = 0; t < 20; ++t) {
      const Field u = random_dirichlet(inst.graph, rng);
      double expect = energy(inst.form, u);
      for (std::int64_t v = 0; v < inst.graph.vertex_count(); ++v)
        expect += inst.weights.w[v] * u.values[v] * u.values[v];
      const double got = starred_norm(inst.form, inst.weights, u, minus_one);
      CHECK(got * got == doctest::Approx(expect).epsilon(1e-12));
      CHECK(std::sqrt(energy(inst.form, u)) <= got + 1e-15);
    }
  }
  SUBCASE("positive coefficients are rejected under the hypothesis") {
    const Field bad = constant_field(inst.graph, 0.5);
    CHECK_THROWS_AS(
        starred_norm(inst.form, inst.weights, random_dirichlet(inst.graph, rng), bad),
        ConfigError);
  }
}

TEST_CASE("summation by parts against the bilinear form") {
  const Instance inst(3, 3);
  std::mt19937_64 rng(19);
  for (int t = 0; t < 50; ++t) {
    const Field u = random_dirichlet(inst.graph, rng);
    const Field v = random_full(inst.graph, rng);
    const double lhs = inst.form.factor * graph_laplacian_all(inst.graph, u).dot(v.values);
    const double rhs = -energy_inner(inst.form, u, v);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("extensions never drop below the coarse energy") {
  // monotonicity: any extension costs at least W_m
  const LevelGraph g = build_gasket(3, 2);
  const Refinement r = refine(g);
  const EnergyForm e = make_energy_form(g);
  const EnergyForm ef = make_energy_form(r.graph);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Field u = sgvar::test::random_full(g, rng);
    const double w0 = energy(e, u);
    Field any = harmonic_extension(g, r, u);
    std::normal_distribution<double> dist(0.0, 0.3);
    for (std::int64_t v = 0; v < r.graph.vertex_count(); ++v) any.values[v] += dist(rng);
    for (std::int64_t v = 0; v < g.vertex_count(); ++v)
      any.values[r.old_to_new[v]] = u.values[v];
    CHECK(energy(ef, any) >= w0 - 1e-11);
  }
}
