#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pilotwave/formalism.hpp"
#include "pilotwave/formalism_json.hpp"
#include "pilotwave/von_neumann.hpp"

using namespace pilotwave::formalism;
using pilotwave::Rng;
using pilotwave::hilbert::identity;
using pilotwave::hilbert::max_abs;
using pilotwave::hilbert::pauli_x;
using pilotwave::hilbert::pauli_y;
using pilotwave::hilbert::pauli_z;
using pilotwave::hilbert::spin_down;
using pilotwave::hilbert::spin_up;

namespace {

StateVector random_state(Rng& rng, std::size_t d) {
  CVector v(static_cast<Eigen::Index>(d));
  for (auto& x : v) x = Complex(rng.normal(), rng.normal());
  return StateVector(v).normalized();
}

CMatrix random_unitary(Rng& rng, int d) {
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(d, d);
}

CMatrix diag(std::initializer_list<double> v) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    m(i, i) = x;
    ++i;
  }
  return m;
}

CMatrix ket_bra(std::size_t d, std::size_t i, std::size_t j) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

// Standard normal CDF by composite Simpson quadrature of the density, used as
// an oracle independent of erf.
double phi_quadrature(double x) {
  const double lo = -12.0;
  const int n = 20000;
  const double h = (x - lo) / n;
  auto f = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi); };
  double s = f(lo) + f(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

std::vector<double> edges(double lo, double hi, int n) {
  std::vector<double> e(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n;
  return e;
}

const StateVector kPlus = spin_up();
const StateVector kMinus = spin_down();
const StateVector kXPlus = StateVector(CVector::Constant(2, std::sqrt(0.5)));

}  // namespace

TEST_CASE("labels compare after rounding to 12 significant digits") {
  CHECK(same_label({1.0}, {1.0 + 1e-14}));
  CHECK_FALSE(same_label({1.0}, {1.0 + 1e-9}));
  CHECK(same_label({-0.0}, {0.0}));
  CHECK(label_in({{1.0}, {2.0, 3.0}})({2.0, 3.0 + 1e-15}));
}

TEST_CASE("pvm_of_operator") {
  const auto z = pvm_of_operator(HermitianOperator(pauli_z()));
  REQUIRE(z.outcomes().size() == 2);
  CHECK(same_label(z.outcomes()[0].label, {1.0}));
  CHECK(max_abs(z.outcomes()[0].op - diag({1, 0})) < 1e-14);
  CHECK(max_abs(z.outcomes()[1].op - diag({0, 1})) < 1e-14);

  const auto id = pvm_of_operator(HermitianOperator(identity(2)));
  REQUIRE(id.outcomes().size() == 1);
  CHECK(max_abs(id.outcomes()[0].op - identity(2)) < 1e-14);

  const auto x = pvm_of_operator(HermitianOperator(pauli_x()));
  CHECK(max_abs(x.outcomes()[0].op - (identity(2) + pauli_x()) / 2.0) < 1e-14);
  CHECK(max_abs(x.outcomes()[1].op - (identity(2) - pauli_x()) / 2.0) < 1e-14);

  CHECK_THROWS_AS(pvm_of_operator(HermitianOperator{Complex(0, 1) * identity(2)}), pilotwave::ValidationError);
}

TEST_CASE("born probabilities") {
  const auto z = pvm_of_operator(HermitianOperator(pauli_z()));
  CHECK(born_probability(z, kPlus, label_in({{1.0}})) == doctest::Approx(1.0));
  const StateVector psi(CVector{{0.6, 0.8}});
  CHECK(born_probability(z, psi, label_in({{1.0}})) == doctest::Approx(0.36).epsilon(1e-14));
  CHECK_THROWS_AS(born_probability(z, StateVector(CVector{{1.0, 1.0}}), any_label()), pilotwave::ValidationError);

  const std::vector<Complex> c = {Complex(0.6, 0), Complex(0, 0.8)};
  const auto coin = povm_of(coin_flip_experiment(3, c, {{0.0}, {1.0}}));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_state(rng, 3);
    CHECK(born_probability(coin, s, label_in({{0.0}})) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(born_probability(coin, s, label_in({{1.0}})) == doctest::Approx(0.64).epsilon(1e-12));
  }
}

TEST_CASE("ideal, normal and standard measurements") {
  const auto ideal = ideal_measurement(HermitianOperator(diag({1, 1, 2})));
  REQUIRE(ideal.outcomes().size() == 2);
  CHECK(ideal.outcomes()[1].op.trace().real() == doctest::Approx(2.0));
  CHECK(ideal.outcomes()[0].op.trace().real() == doctest::Approx(1.0));

  // A = I with U = sigma_x: R = sigma_x, outcome certain, state flipped.
  const auto flip = normal_measurement(HermitianOperator(identity(2)), {UnitaryOperator(pauli_x())});
  CHECK(max_abs(flip.outcomes()[0].op - pauli_x()) < 1e-14);
  Rng rng(1);
  const auto r = strong_measure(flip, kPlus, rng);
  CHECK(max_abs(r.post_state.amplitudes() - kMinus.amplitudes()) < 1e-14);

  // Rotation inside the degenerate eigenspace of diag(1,1,2): R commutes with A.
  CMatrix u = identity(3);
  u.topLeftCorner(2, 2) = random_unitary(rng, 2);
  const HermitianOperator a(diag({1, 1, 2}));
  const auto normal = normal_measurement(a, {UnitaryOperator(u), UnitaryOperator::identity(3)});
  for (const auto& o : normal.outcomes()) CHECK(max_abs(o.op * a.matrix() - a.matrix() * o.op) < 1e-10);
  CHECK_THROWS_AS(normal_measurement(a, {UnitaryOperator(random_unitary(rng, 3)), UnitaryOperator::identity(3)}),
                  pilotwave::ValidationError);
  CHECK_THROWS_AS(normal_measurement(a, {UnitaryOperator::identity(3)}), pilotwave::ValidationError);

  // Photodetection: every outcome lands in the vacuum e0.
  std::vector<Outcome> spaces;
  std::vector<CMatrix> t;
  for (std::size_t k = 0; k < 3; ++k) {
    spaces.push_back({{static_cast<double>(k)}, ket_bra(3, k, k)});
    t.push_back(ket_bra(3, 0, k));
  }
  const auto photo = standard_measurement(Pvm(spaces), t);
  const auto povm = povm_of(photo);
  for (std::size_t k = 0; k < 3; ++k) CHECK(max_abs(povm.outcomes()[k].op - ket_bra(3, k, k)) < 1e-14);
  const auto psi = random_state(rng, 3);
  for (int i = 0; i < 20; ++i) {
    const auto res = strong_measure(photo, psi, rng);
    CHECK(std::abs(std::abs(res.post_state[0]) - 1.0) < 1e-12);
  }

  // Random isometries T_alpha: R^dagger R = P_alpha.
  const auto pa = pvm_of_operator(a);
  const auto std_m = standard_measurement(pa, {random_unitary(rng, 3), random_unitary(rng, 3)});
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(max_abs(std_m.outcomes()[k].op.adjoint() * std_m.outcomes()[k].op - pa.outcomes()[k].op) < 1e-10);
  CHECK_THROWS_AS(standard_measurement(pa, {2.0 * identity(3), identity(3)}), pilotwave::ValidationError);
}

TEST_CASE("strong_measure sampling") {
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto r = strong_measure(z, kPlus, rng);
    CHECK(same_label(r.label, {1.0}));
    CHECK(max_abs(r.post_state.amplitudes() - kPlus.amplitudes()) < 1e-15);
  }
  int plus = 0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    plus += same_label(strong_measure(z, kXPlus, rng).label, {1.0});
  }
  CHECK(std::abs(plus / double(n) - 0.5) <= 0.015);

  Rng a(99), b(99);
  CHECK(strong_measure(z, kXPlus, a).index == strong_measure(z, kXPlus, b).index);

  // Shift experiment on e_0: +-1 with probability 1/2, post-states e_{+-1}.
  const std::size_t k = 4;
  const auto shift = shift_experiment(k);
  const auto e0 = StateVector::basis(2 * k + 1, k);
  const auto dist = born_distribution(povm_of(shift), e0);
  for (const auto& [label, p] : dist) CHECK(p == doctest::Approx(0.5).epsilon(1e-14));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto r = strong_measure(shift, e0, rng);
    const std::size_t expect = r.label[0] > 0 ? k + 1 : k - 1;
    CHECK(std::abs(std::abs(r.post_state[expect]) - 1.0) < 1e-14);
  }
}

TEST_CASE("sequential probabilities") {
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  const auto x = ideal_measurement(HermitianOperator(pauli_x()));
  const auto id = UnitaryOperator::identity(2);

  const StateVector psi(CVector{{0.6, Complex(0, 0.8)}});
  const auto one = sequential_probability({z}, {id}, psi);
  CHECK(one.at({{1.0}}) == doctest::Approx(0.36).epsilon(1e-14));

  const auto zz = sequential_probability({z, z}, {id, id}, kPlus);
  for (const auto& [labels, p] : zz) CHECK(p == doctest::Approx(labels == LabelTuple{{1.0}, {1.0}} ? 1.0 : 0.0));

  const auto zx = sequential_probability({z, x}, {id, id}, kPlus);
  CHECK(zx.at({{1.0}, {1.0}}) == doctest::Approx(0.5));
  CHECK(zx.at({{1.0}, {-1.0}}) == doctest::Approx(0.5));

  // Sum-rule failure: marginalizing the intermediate sigma_x of (z, x, z)
  // differs from (z, z) on psi = x+.
  const auto zxz = sequential_probability({z, x, z}, {id, id, id}, kXPlus);
  const auto zz2 = sequential_probability({z, z}, {id, id}, kXPlus);
  // Brute-force oracle with explicit projectors.
  const CMatrix pz[2] = {diag({1, 0}), diag({0, 1})};
  const CMatrix px[2] = {(identity(2) + pauli_x()) / 2.0, (identity(2) - pauli_x()) / 2.0};
  const double val[2] = {1.0, -1.0};
  double discrepancy = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) {
      double marg = 0.0;
      for (int b = 0; b < 2; ++b) {
        const double oracle = (pz[c] * px[b] * pz[a] * kXPlus.amplitudes()).squaredNorm();
        CHECK(zxz.at({{val[a]}, {val[b]}, {val[c]}}) == doctest::Approx(oracle).epsilon(1e-12));
        marg += oracle;
      }
      discrepancy = std::max(discrepancy, std::abs(marg - zz2.at({{val[a]}, {val[c]}})));
    }
  CHECK(discrepancy >= 0.1);

  // Evolution between the measurements: R(t) = U^-1 R U.
  const auto u = UnitaryOperator::evolution(HermitianOperator(pauli_y()), std::numbers::pi / 4);
  const auto ev = sequential_probability({z, z}, {id, u}, kPlus);
  const CMatrix r2 = u.matrix().adjoint() * pz[0] * u.matrix();
  CHECK(ev.at({{1.0}, {1.0}}) == doctest::Approx((r2 * pz[0] * kPlus.amplitudes()).squaredNorm()).epsilon(1e-12));

  CHECK_THROWS_AS(sequential_probability({z, x}, {id}, kPlus), pilotwave::DimensionError);
}

TEST_CASE("recalibration") {
  const auto x = ideal_measurement(HermitianOperator(pauli_x()));
  const auto same = recalibrate(x, [](const Label& l) { return l; });
  CHECK(max_abs(same.outcomes()[0].op - x.outcomes()[0].op) == 0.0);

  const auto squared = recalibrate(x, [](const Label& l) { return Label{l[0] * l[0]}; });
  const auto p = povm_of(squared);
  REQUIRE(p.outcomes().size() == 1);
  CHECK(max_abs(p.outcomes()[0].op - identity(2)) < 1e-14);

  // 1_Delta(M) versus the ideal measurement of P^A(Delta).
  const HermitianOperator a(diag({1, 2, 3}));
  const auto ind = recalibrate(ideal_measurement(a), [](const Label& l) { return Label{l[0] < 2.5 ? 1.0 : 0.0}; });
  const auto proj = ideal_measurement(HermitianOperator(diag({1, 1, 0})));
  const StateVector psi(CVector{{std::sqrt(0.5), std::sqrt(0.5), 0.0}});
  CHECK(born_probability(povm_of(ind), psi, label_in({{1.0}})) == doctest::Approx(1.0));
  CHECK(born_probability(povm_of(proj), psi, label_in({{1.0}})) == doctest::Approx(1.0));
  Rng rng(2);
  const auto post_ind = strong_measure(ind, psi, rng).post_state;
  const auto post_proj = strong_measure(proj, psi, rng).post_state;
  CHECK(std::abs(pilotwave::hilbert::inner(post_proj, psi)) == doctest::Approx(1.0));
  CHECK(std::abs(pilotwave::hilbert::inner(post_ind, psi)) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("povm_of") {
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  CHECK(povm_of(z).is_pvm());

  const std::size_t k = 4, n = 2 * k + 1;
  const auto shift = povm_of(shift_experiment(k));
  CHECK_FALSE(shift.is_pvm());
  for (const auto& o : shift.outcomes()) {
    CMatrix expect = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      expect(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
          i == k ? 0.5 : ((i > k) == (o.label[0] > 0) ? 1.0 : 0.0);
    CHECK(max_abs(o.op - expect) < 1e-14);
  }

  // Composite (sigma_z then sigma_x): the effects are P^z_a/2, which commute.
  const auto x = ideal_measurement(HermitianOperator(pauli_x()));
  std::vector<Outcome> comp;
  for (const auto& a : z.outcomes())
    for (const auto& b : x.outcomes()) comp.push_back({{a.label[0], b.label[0]}, b.op * a.op});
  const auto cp = povm_of(StrongMeasurement(comp, Mode::Experiment));
  for (const auto& o : cp.outcomes()) CHECK(max_abs(o.op - 0.5 * z.outcomes()[o.label[0] > 0 ? 0 : 1].op) < 1e-14);
  CHECK(max_abs(pilotwave::hilbert::commutator(cp.outcomes()[0].op, cp.outcomes()[2].op)) < 1e-14);
  // With a degenerate first measurement on C^3 the composite effects do not commute.
  const auto deg = ideal_measurement(HermitianOperator(diag({1, 1, 2})));
  const CMatrix h = (CMatrix(3, 3) << 0, 1, 1, 1, 0, Complex(0, 1), 1, Complex(0, -1), 0).finished();
  const auto second = ideal_measurement(HermitianOperator(h));
  std::vector<Outcome> comp3;
  for (const auto& a : deg.outcomes())
    for (const auto& b : second.outcomes()) comp3.push_back({{a.label[0], b.label[0]}, b.op * a.op});
  const auto p3 = povm_of(StrongMeasurement(comp3, Mode::Experiment));
  double worst = 0.0;
  for (const auto& o1 : p3.outcomes())
    for (const auto& o2 : p3.outcomes()) worst = std::max(worst, max_abs(pilotwave::hilbert::commutator(o1.op, o2.op)));
  CHECK(worst > 0.01);

  CHECK_THROWS_AS(StrongMeasurement({{{1.0}, 0.5 * identity(2)}}, Mode::Experiment), pilotwave::ValidationError);
}

TEST_CASE("approximate POVM") {
  const HermitianOperator a(diag({-1.0, 0.5, 2.0}));
  const double gap = 1.5, sigma = 1e-4 * gap;
  const auto sharp = approximate_povm(a, sigma, {-1.1, -0.5, 1.0, 2.1});
  const auto pvm = pvm_of_operator(a);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto psi = random_state(rng, 3);
    const std::vector<std::pair<double, double>> pairs = {{-0.8, -1.0}, {0.25, 0.5}, {1.55, 2.0}};
    for (const auto& [mid, eig] : pairs)
      CHECK(std::abs(born_probability(sharp, psi, label_in({{mid}})) - born_probability(pvm, psi, label_in({{eig}}))) <= 1e-6);
  }

  const auto z = approximate_povm(HermitianOperator(pauli_z()), 1.0, {-7.0, 0.0, 7.0});
  const CMatrix upper = z.outcomes()[1].op;
  CHECK(upper(0, 0).real() == doctest::Approx(phi_quadrature(1.0)).epsilon(1e-10));
  CHECK(upper(1, 1).real() == doctest::Approx(phi_quadrature(-1.0)).epsilon(1e-10));
  CHECK(std::abs(upper(0, 1)) < 1e-15);

  const auto fine = approximate_povm(a, 0.3, edges(-3.0, 4.0, 700));
  CHECK(fine.closure_residual() <= 1e-10);
  for (const auto& o1 : fine.outcomes())
    CHECK(max_abs(pilotwave::hilbert::commutator(o1.op, fine.outcomes()[350].op)) <= 1e-10);
  const auto psi = random_state(rng, 3);
  double mean = 0.0;
  for (const auto& [l, p] : born_distribution(fine, psi)) mean += l[0] * p;
  const double expect_a = psi.amplitudes().dot(a.matrix() * psi.amplitudes()).real();
  CHECK(mean == doctest::Approx(expect_a).epsilon(1e-6));

  CHECK_THROWS_AS(approximate_povm(a, 0.3, edges(-2.0, 4.0, 10)), pilotwave::CoverageError);
  CHECK_THROWS_AS(approximate_povm(a, 0.0, edges(-3.0, 4.0, 10)), pilotwave::ValidationError);
}

TEST_CASE("weak transformers") {
  const HermitianOperator a(pauli_z());
  const StateVector psi(CVector{{0.6, 0.8}});
  const double exp_a = 0.36 - 0.64;

  // Disturbance, averaged over outcomes, shrinks like 1/sigma^2.
  for (double sigma : {5.0, 10.0, 20.0}) {
    const auto w = weak_transformers(a, sigma, edges(-1 - 7 * sigma, 1 + 7 * sigma, 400));
    double infidelity = 0.0;
    for (const auto& o : w.outcomes()) {
      const CVector r = o.op * psi.amplitudes();
      if (r.norm() < 1e-12) continue;
      infidelity += r.squaredNorm() * (1.0 - std::abs(psi.amplitudes().dot(r)) / r.norm());
    }
    CHECK(infidelity <= 1.0 / (sigma * sigma));
  }

  const double sigma = 0.5;
  const auto w = weak_transformers(a, sigma, edges(-5.0, 5.0, 2000));
  const auto p = povm_of(w);
  CHECK(p.closure_residual() <= 1e-10);
  double m1 = 0, m2 = 0, e1 = 0, e2 = 0;
  for (const auto& [l, prob] : born_distribution(p, psi)) {
    m1 += l[0] * prob;
    m2 += l[0] * l[0] * prob;
  }
  for (const auto& [l, prob] : born_distribution(p, kPlus)) {
    e1 += l[0] * prob;
    e2 += l[0] * l[0] * prob;
  }
  const double h = 10.0 / 2000;
  CHECK(m1 == doctest::Approx(exp_a).epsilon(1e-6));
  // Second moment carries the noise variance on top of <A^2> = 1.
  CHECK(m2 == doctest::Approx(1.0 + sigma * sigma + h * h / 12).epsilon(1e-6));
  CHECK(std::abs(m2 - 1.0) > 0.2);
  // Eigenstate: Gaussian centred at the eigenvalue.
  CHECK(e1 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(e2 - e1 * e1 == doctest::Approx(sigma * sigma + h * h / 12).epsilon(1e-6));
}

TEST_CASE("discrete experiments") {
  Rng rng(8);
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  const auto ez = build_discrete_experiment(z);
  CHECK(ez.apparatus_dim == 3);
  const StateVector psi(CVector{{0.6, Complex(0, 0.8)}});
  const CVector out = ez.apply(psi).amplitudes();
  // (R_+ psi) (x) Phi_+ + (R_- psi) (x) Phi_-: composite index s*3 + pointer.
  CVector expect = CVector::Zero(6);
  expect(0 * 3 + 1) = 0.6;
  expect(1 * 3 + 2) = Complex(0, 0.8);
  CHECK(max_abs(out - expect) < 1e-14);

  const std::vector<Complex> c = {Complex(0.6, 0), Complex(0, 0.48), Complex(0.64, 0)};
  const auto coin = build_discrete_experiment(coin_flip_experiment(2, c, {{0.0}, {1.0}, {2.0}}));
  for (int i = 0; i < 10; ++i) {
    const auto s = random_state(rng, 2);
    const auto probs = coin.pointer_probabilities(s);
    for (std::size_t k = 0; k < 3; ++k) CHECK(probs[k] == doctest::Approx(std::norm(c[k])).epsilon(1e-12));
    CVector pointer = CVector::Zero(4);
    for (std::size_t k = 0; k < 3; ++k) pointer(static_cast<Eigen::Index>(k + 1)) = c[k];
    const auto prod = pilotwave::hilbert::tensor_product(s, StateVector(pointer));
    CHECK(max_abs(coin.apply(s).amplitudes() - prod.amplitudes()) < 1e-12);
  }

  // Shift experiment: branch subspaces are preserved on interior basis
  // vectors, yet the POVM is not a PVM.
  const std::size_t k = 4, n = 2 * k + 1;
  const auto shift = shift_experiment(k);
  const auto spec = build_discrete_experiment(shift);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i == k) continue;
    const CVector o = spec.apply(StateVector::basis(n, i)).amplitudes();
    const std::size_t pointer = i > k ? 1 : 2;  // labels +1, -1 in that order
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < spec.apparatus_dim; ++j) {
        const bool allowed = j == pointer && (i > k ? s > k : s < k);
        if (!allowed) CHECK(std::abs(o(static_cast<Eigen::Index>(s * spec.apparatus_dim + j))) < 1e-14);
      }
    // Repeating with a fresh apparatus reproduces the result.
    Rng r(i);
    const auto first = strong_measure(shift, StateVector::basis(n, i), r);
    const auto again = strong_measure(shift, first.post_state, r);
    CHECK(same_label(first.label, again.label));
  }
  CHECK_FALSE(povm_of(shift).is_pvm());
}

TEST_CASE("joint PVM of commuting families") {
  const auto s = pilotwave::hilbert::singlet();
  const HermitianOperator z1(pilotwave::hilbert::tensor_product(pauli_z(), identity(2)));
  const HermitianOperator z2(pilotwave::hilbert::tensor_product(identity(2), pauli_z()));
  const auto j = joint_pvm({z1, z2});
  CHECK(j.outcomes().size() == 4);
  CHECK(born_probability(j, s, label_in({{1.0, -1.0}})) == doctest::Approx(0.5));
  CHECK(born_probability(j, s, label_in({{-1.0, 1.0}})) == doctest::Approx(0.5));
  CHECK(born_probability(j, s, label_in({{1.0, 1.0}})) == doctest::Approx(0.0));
  CHECK(born_probability(j, s, label_in({{-1.0, -1.0}})) == doctest::Approx(0.0));

  const HermitianOperator a(diag({1, 1, 2}));
  const auto single = joint_pvm({a});
  const auto direct = pvm_of_operator(a);
  REQUIRE(single.outcomes().size() == direct.outcomes().size());
  for (std::size_t i = 0; i < direct.outcomes().size(); ++i)
    CHECK(max_abs(single.outcomes()[i].op - direct.outcomes()[i].op) < 1e-14);

  Rng rng(6);
  const double c = std::sqrt(0.5);
  const auto sa = pilotwave::hilbert::tensor_product(pilotwave::hilbert::spin_along({0, 0, 1}), HermitianOperator(identity(2)));
  const auto sb = pilotwave::hilbert::tensor_product(HermitianOperator(identity(2)), pilotwave::hilbert::spin_along({c, 0, c}));
  const auto sc = pilotwave::hilbert::tensor_product(HermitianOperator(identity(2)), pilotwave::hilbert::spin_along({0, 1, 0}));
  const auto jab = joint_pvm({sa, sb});
  const auto jac = joint_pvm({sa, sc});
  for (int i = 0; i < 20; ++i) {
    const auto psi = random_state(rng, 4);
    auto first_is_plus = [](const Label& l) { return l[0] > 0; };
    CHECK(born_probability(jab, psi, first_is_plus) == doctest::Approx(born_probability(jac, psi, first_is_plus)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(joint_pvm({HermitianOperator(pauli_x()), HermitianOperator(pauli_z())}), pilotwave::ValidationError);
}

TEST_CASE("density matrices and instruments") {
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  const auto half = density_update(DensityMatrix::maximally_mixed(2), z, {1.0});
  CHECK(half.probability == doctest::Approx(0.5));
  CHECK(max_abs(half.state.matrix() - diag({1, 0})) < 1e-14);
  CHECK_THROWS_AS(density_update(DensityMatrix::pure(kPlus), z, {-1.0}), pilotwave::MeasurementError);

  Rng rng(12);
  const auto x = ideal_measurement(HermitianOperator(pauli_x()));
  for (int i = 0; i < 20; ++i) {
    const auto psi = random_state(rng, 2);
    Rng r(static_cast<std::uint64_t>(i));
    const auto res = strong_measure(x, psi, r);
    const auto up = density_update(DensityMatrix::pure(psi), x, res.label);
    CHECK(max_abs(up.state.matrix() - res.post_state.projector()) <= 1e-12);
  }

  // Mixture update equals the mix of updates with reweighted probabilities.
  const auto psi1 = random_state(rng, 3), psi2 = random_state(rng, 3);
  const double w1 = 0.3, w2 = 0.7;
  const auto meas = ideal_measurement(HermitianOperator(diag({1, 1, 2})));
  const auto mixed = density_update(ensemble_density({{w1, psi1}, {w2, psi2}}), meas, {1.0});
  const auto u1 = density_update(DensityMatrix::pure(psi1), meas, {1.0});
  const auto u2 = density_update(DensityMatrix::pure(psi2), meas, {1.0});
  const double p = w1 * u1.probability + w2 * u2.probability;
  CHECK(mixed.probability == doctest::Approx(p).epsilon(1e-12));
  const CMatrix mix_of_updates = (w1 * u1.probability / p) * u1.state.matrix() + (w2 * u2.probability / p) * u2.state.matrix();
  CHECK(max_abs(mixed.state.matrix() - mix_of_updates) <= 1e-12);

  CHECK(max_abs(ensemble_density({{1.0, psi1}}).matrix() - psi1.projector()) < 1e-15);
  const auto a = ensemble_density({{0.5, kPlus}, {0.5, kMinus}});
  const StateVector xm(CVector{{std::sqrt(0.5), -std::sqrt(0.5)}});
  const auto b = ensemble_density({{0.5, kXPlus}, {0.5, xm}});
  CHECK(max_abs(a.matrix() - identity(2) / 2.0) < 1e-15);
  CHECK(max_abs(b.matrix() - identity(2) / 2.0) < 1e-15);
  CHECK_THROWS_AS(ensemble_density({{0.5, kPlus}}), pilotwave::ValidationError);
  CHECK_THROWS_AS(ensemble_density({{1.5, kPlus}, {-0.5, kMinus}}), pilotwave::ValidationError);

  const auto povm = povm_of(meas);
  const auto w = ensemble_density({{w1, psi1}, {w2, psi2}});
  CHECK(born_probability(povm, w, label_in({{2.0}})) ==
        doctest::Approx(w1 * born_probability(povm, psi1, label_in({{2.0}})) + w2 * born_probability(povm, psi2, label_in({{2.0}}))).epsilon(1e-12));

  // Instruments.
  const auto ins = instrument_of(z);
  const CMatrix wm = w.matrix().topLeftCorner(2, 2) / w.matrix().topLeftCorner(2, 2).trace();
  const CMatrix lueders = diag({1, 0}) * wm * diag({1, 0}) + diag({0, 1}) * wm * diag({0, 1});
  CHECK(max_abs(ins.apply(any_label(), wm) - lueders) < 1e-15);
  CHECK(max_abs(ins.apply([](const Label&) { return false; }, wm)) == 0.0);
  CHECK(ins.apply(any_label(), wm).trace().real() == doctest::Approx(1.0));

  const auto three = ideal_measurement(HermitianOperator(diag({-1, 0, 1})));
  const auto ins3 = instrument_of(three);
  const auto cond = ins3.conditional(label_in({{1.0}, {-1.0}}), w);
  const auto a1 = density_update(w, three, {1.0});
  const auto am = density_update(w, three, {-1.0});
  const CMatrix avg = (a1.probability * a1.state.matrix() + am.probability * am.state.matrix()) / (a1.probability + am.probability);
  CHECK(max_abs(cond.matrix() - avg) < 1e-12);
  // Additivity over disjoint label sets.
  const CMatrix sum = ins3.apply(label_in({{1.0}}), w.matrix()) + ins3.apply(label_in({{-1.0}, {0.0}}), w.matrix());
  CHECK(max_abs(sum - ins3.apply(any_label(), w.matrix())) < 1e-15);
}

TEST_CASE("invariants over constructed measurements") {
  Rng rng(21);
  const HermitianOperator a3(diag({-1, 0.5, 2}));
  std::vector<StrongMeasurement> all = {
      ideal_measurement(HermitianOperator(pauli_z())),
      ideal_measurement(a3),
      shift_experiment(4),
      weak_transformers(a3, 0.4, edges(-4.0, 5.0, 90)),
      coin_flip_experiment(3, {Complex(0.6, 0), Complex(0, 0.8)}, {{0.0}, {1.0}}),
      normal_measurement(HermitianOperator(identity(2)), {UnitaryOperator(pauli_x())}),
  };
  for (const auto& m : all) {
    CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(m.dim()), static_cast<Eigen::Index>(m.dim()));
    for (const auto& o : m.outcomes()) {
      const CMatrix e = o.op.adjoint() * o.op;
      sum += e;
      if (m.mode() == Mode::Strong) CHECK(max_abs(e * e - e) <= 1e-10);
    }
    CHECK(max_abs(sum - identity(m.dim())) <= 1e-10);
    const auto p = povm_of(m);
    for (int i = 0; i < 200; ++i) {
      const auto psi = random_state(rng, m.dim());
      CHECK(born_probability(p, psi, any_label()) == doctest::Approx(1.0).epsilon(1e-10));
    }
    // Recalibration commutes with taking the POVM.
    auto f = [](const Label& l) { return Label{std::floor(l[0])}; };
    const auto left = povm_of(recalibrate(m, f));
    const auto right = pushforward(povm_of(m), f);
    REQUIRE(left.outcomes().size() == right.outcomes().size());
    for (std::size_t i = 0; i < left.outcomes().size(); ++i) {
      CHECK(same_label(left.outcomes()[i].label, right.outcomes()[i].label));
      CHECK(max_abs(left.outcomes()[i].op - right.outcomes()[i].op) <= 1e-12);
    }
    // Quadratic-map inequality mu^{psi1+psi2} <= 2(mu^{psi1} + mu^{psi2}).
    for (int i = 0; i < 100; ++i) {
      const auto p1 = random_state(rng, m.dim());
      const auto p2 = random_state(rng, m.dim());
      const StateVector sum12(p1.amplitudes() + p2.amplitudes());
      for (const auto& o : p.outcomes()) {
        auto mu = [&](const StateVector& s) { return s.amplitudes().dot(o.op * s.amplitudes()).real(); };
        CHECK(mu(sum12) <= 2 * (mu(p1) + mu(p2)) + 1e-10);
      }
    }
    // Sequential reproduction of the Wigner formula for ideal measurements.
    const auto two = sequential_probability({m, m}, {UnitaryOperator::identity(m.dim()), UnitaryOperator::identity(m.dim())},
                                            random_state(rng, m.dim()));
    double total = 0.0;
    for (const auto& [k, v] : two) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }

  // Wigner formula oracle: chained projector application.
  const auto z = ideal_measurement(HermitianOperator(pauli_z()));
  const auto x = ideal_measurement(HermitianOperator(pauli_x()));
  const auto id = UnitaryOperator::identity(2);
  for (int i = 0; i < 50; ++i) {
    const auto psi = random_state(rng, 2);
    const auto seq = sequential_probability({x, z, x}, {id, id, id}, psi);
    for (const auto& o1 : x.outcomes())
      for (const auto& o2 : z.outcomes())
        for (const auto& o3 : x.outcomes()) {
          CVector v = psi.amplitudes();
          v = o1.op * v;
          v = o2.op * v;
          v = o3.op * v;
          CHECK(std::abs(seq.at({canonical(o1.label), canonical(o2.label), canonical(o3.label)}) - v.squaredNorm()) <= 1e-12);
        }
  }
}

TEST_CASE("JSON round trip is bit-faithful") {
  Rng rng(31);
  const auto w = weak_transformers(HermitianOperator(diag({-1.0 / 3, 0.1, 2.0 / 7})), 0.37, edges(-3.0, 3.0, 17));
  const auto j = to_json(w);
  const auto back = measurement_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.outcomes().size() == w.outcomes().size());
  CHECK(back.mode() == Mode::Experiment);
  for (std::size_t i = 0; i < w.outcomes().size(); ++i) {
    CHECK(back.outcomes()[i].label == w.outcomes()[i].label);
    CHECK((back.outcomes()[i].op.array() == w.outcomes()[i].op.array()).all());
  }
  const auto p = povm_of(w);
  const auto pb = povm_from_json(nlohmann::json::parse(to_json(p).dump()));
  CHECK((pb.outcomes()[3].op.array() == p.outcomes()[3].op.array()).all());
  const auto pvm = pvm_of_operator(HermitianOperator(pauli_x()));
  CHECK(pvm_from_json(to_json(pvm)).outcomes().size() == 2);

  auto bad = j;
  bad["outcomes"][0]["matrix"].erase(0);
  CHECK_THROWS_AS(measurement_from_json(bad), pilotwave::ValidationError);
  CHECK_THROWS_AS(measurement_from_json(nlohmann::json{{"dim", 2}}), pilotwave::ValidationError);
  CHECK_THROWS_AS(pvm_from_json(j), pilotwave::ValidationError);
}

TEST_CASE("von Neumann coupling yields an ideal measurement once pointers separate") {
  namespace wf = pilotwave::wavefield;
  const auto grid = wf::GridSpec::line(-20, 20, 512);
  const double width = 0.5;
  const auto pointer = wf::analytic::sample(grid, 0.0, [&](const wf::Point& q) { return wf::analytic::free_gaussian(q[0], 0.0, 0.0, width, 0.0); });
  const HermitianOperator sz(pauli_z());
  const auto e = von_neumann_experiment(sz, 10 * width, pointer);
  CHECK(e.separated);
  CHECK(e.max_overlap < 1e-6);
  CHECK(e.pointer_positions == std::vector<double>{5.0, -5.0});
  CHECK(e.ideal_deviation <= 1e-6);

  Rng rng(17);
  const auto ideal = pvm_of_operator(sz);
  for (int k = 0; k < 20; ++k) {
    const auto psi = random_state(rng, 2);
    for (double lam : {1.0, -1.0})
      CHECK(std::abs(born_probability(e.readout, psi, label_in({{lam}})) - born_probability(ideal, psi, label_in({{lam}}))) <= 1e-6);
  }

  // Branch structure against the pointer shifted in closed form.
  const StateVector psi(CVector{{Complex(0.6, 0.0), Complex(0.0, 0.8)}});
  const auto out = e.apply(psi);
  double err = 0.0;
  for (std::size_t y = 0; y < grid.size(); ++y) {
    const double z = grid.coords(y)[0];
    err = std::max(err, std::abs(out[y] - 0.6 * wf::analytic::free_gaussian(z, 0.0, 5.0, width, 0.0)));
    err = std::max(err, std::abs(out[grid.size() + y] - Complex(0.0, 0.8) * wf::analytic::free_gaussian(z, 0.0, -5.0, width, 0.0)));
  }
  CHECK(err < 1e-10);

  const auto none = von_neumann_experiment(sz, 0.0, pointer);
  CHECK(!none.separated);
  for (const auto& p : none.pointers) CHECK(p.samples() == pointer.samples());
  CHECK(none.readout.outcomes().size() == 1);

  const auto close = von_neumann_experiment(sz, 0.5 * width, pointer);
  CHECK(!close.separated);
  CHECK(close.ideal_deviation > 0.1);
}

TEST_CASE("von Neumann coupling plus a commuting H0 gives a normal measurement") {
  namespace wf = pilotwave::wavefield;
  const auto grid = wf::GridSpec::line(-20, 20, 512);
  const auto pointer = wf::analytic::sample(grid, 0.0, [](const wf::Point& q) { return wf::analytic::free_gaussian(q[0], 0.0, 0.0, 0.5, 0.0); });
  const HermitianOperator a(diag({2.0, -1.0, -1.0}));
  CMatrix h0m = CMatrix::Zero(3, 3);
  h0m(0, 0) = 0.7;
  h0m.block(1, 1, 2, 2) = pauli_x();
  VonNeumannOptions opt;
  opt.h0 = HermitianOperator(h0m);
  opt.duration = 1.3;
  const auto e = von_neumann_experiment(a, 5.0, pointer, opt);
  const CMatrix u = UnitaryOperator::evolution(HermitianOperator(h0m), 1.3).matrix();
  for (const auto& o : e.measurement.outcomes()) {
    const auto& p = e.spectral.outcomes()[o.label[0] > 0 ? 0 : 1].op;
    CHECK(max_abs(o.op - u * p) < 1e-12);
  }
  // Same transformers as normal_measurement with that unitary on every eigenspace.
  const auto normal = normal_measurement(a, {UnitaryOperator(u), UnitaryOperator(u)});
  for (const auto& o : normal.outcomes())
    for (const auto& r : e.measurement.outcomes())
      if (same_label(o.label, r.label)) CHECK(max_abs(o.op - r.op) < 1e-12);

  opt.h0 = HermitianOperator(CMatrix(pauli_x().cwiseProduct(CMatrix::Ones(2, 2))));
  CHECK_THROWS_AS(von_neumann_experiment(HermitianOperator(pauli_z()), 5.0, pointer, opt), pilotwave::ValidationError);
}
