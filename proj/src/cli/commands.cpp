#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>

#include <CLI11.hpp>

#include "pilotwave/cli.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/experiments.hpp"
#include "pilotwave/nogo.hpp"
#include "pilotwave/parallel.hpp"

namespace pilotwave::cli {

namespace {

namespace an = wavefield::analytic;
namespace ex = experiments;
namespace fm = formalism;
using hilbert::CMatrix;
using hilbert::Complex;
using hilbert::CVector;
using hilbert::HermitianOperator;
using hilbert::StateVector;

constexpr double kPi = std::numbers::pi;

double num(const RunConfig& c, const char* key) { return c.params.at(key).get<double>(); }
std::size_t count(const RunConfig& c, const char* key) { return c.params.at(key).get<std::size_t>(); }
std::string str(const RunConfig& c, const char* key) { return c.params.at(key).get<std::string>(); }
std::vector<double> list(const RunConfig& c, const char* key) { return c.params.at(key).get<std::vector<double>>(); }

Check check_gt(std::string name, double value, double bound) { return {std::move(name), value, bound, ">", value > bound}; }

std::string status_name(bohm::TrajectoryStatus s) { return bohm::to_string(s); }

Json record_json(const ex::RunRecord& r) {
  Json freq = Json::array();
  for (const auto& [label, f] : r.frequencies) freq.push_back({{"label", label}, {"frequency", f}});
  return {{"name", r.name},     {"seed", r.seed},         {"trials", r.trials.size()}, {"frequencies", freq},
          {"mean", r.mean},     {"variance", r.variance}, {"aborted", r.aborted},      {"flagged", r.flagged},
          {"warnings", r.warnings}};
}

std::string label_text(const fm::Label& l) { return l.empty() ? "" : fmt(l[0]); }

// ---- equivariance

struct Scenario {
  wavefield::GridWaveFunction psi0;
  wavefield::HamiltonianSpec h;
  double dt = 0.0;
  std::size_t steps = 0;
};

Scenario equivariance_scenario(const std::string& name) {
  if (name == "trap") {
    // (phi_0 + phi_1)/sqrt 2 sloshing in the unit trap for half a period
    const auto grid = wavefield::GridSpec::line(-10, 10, 256);
    auto h = wavefield::HamiltonianSpec::free(1).with_potential(grid, [](const wavefield::Point& q) { return 0.5 * q[0] * q[0]; });
    const std::vector<Complex> c{std::sqrt(0.5), std::sqrt(0.5)};
    auto psi = an::sample(grid, 0.0, [&](const wavefield::Point& q) { return an::trap_superposition(c, q[0], 0.0, 1.0); });
    psi.normalize();
    return {psi, h, kPi / 800.0, 800};
  }
  if (name == "free" || name == "control") {
    const auto grid = wavefield::GridSpec::line(-24, 24, 512);
    auto psi = an::sample(grid, 0.0, [](const wavefield::Point& q) { return an::free_gaussian(q[0], 0.0, -2.0, 1.0, 1.0); });
    psi.normalize();
    return {psi, wavefield::HamiltonianSpec::free(1), 0.01, name == "free" ? std::size_t{200} : std::size_t{0}};
  }
  throw ConfigError("scenario must be trap, free or control");
}

Report run_equivariance(const RunConfig& c) {
  const auto sc = equivariance_scenario(str(c, "scenario"));
  const auto ens = bohm::sample_equilibrium(sc.psi0, c.n, c.seed);
  const auto flow = bohm::transport(sc.psi0, sc.h, sc.dt, sc.steps, ens.members);
  std::vector<bohm::Configuration> ends;
  Report r;
  r.columns = {"id", "x0", "x_t", "status"};
  for (std::size_t i = 0; i < c.n; ++i) {
    const auto& tr = flow.trajectories[i];
    if (tr.completed()) ends.push_back(tr.end());
    r.add_row({std::to_string(i), fmt(ens.members[i][0]), fmt(tr.end()[0]), status_name(tr.status)});
  }
  if (ends.empty()) throw NumericalGuardError("every trajectory aborted");
  const double tv = bohm::tv_to_density(ends, flow.final_state.grid(), flow.final_state.density(), count(c, "bins"));
  r.results = {{"scenario", str(c, "scenario")}, {"time", flow.final_state.time()}, {"tv", tv}, {"aborted", flow.aborted}};
  r.checks.push_back(check_le("tv", tv, num(c, "tolerance")));
  r.checks.push_back(check_le("aborted fraction", static_cast<double>(flow.aborted) / static_cast<double>(c.n), 1e-3));
  return r;
}

// ---- coupled oscillators

Report run_coupled(const RunConfig& c) {
  ex::CoupledOscillatorParams p;
  p.half_width = num(c, "half_width");
  p.points = count(c, "points");
  p.dt = num(c, "dt");
  p.duration = num(c, "duration");
  const auto rep = ex::coupled_oscillator(c.n, c.seed, p);
  Report r;
  r.columns = {"id", "x0", "y0", "x_t", "y_t", "max_error"};
  for (std::size_t i = 0; i < rep.n; ++i)
    r.add_row({std::to_string(i), fmt(rep.starts[i][0]), fmt(rep.starts[i][1]), fmt(rep.ends[i][0]), fmt(rep.ends[i][1]),
               fmt(rep.errors[i])});
  r.results = {{"max_error", rep.max_error}, {"symmetry_error", rep.symmetry_error}, {"aborted", rep.aborted}};
  r.checks.push_back(check_le("max |X_t - (aX + bY)|", rep.max_error, num(c, "tolerance")));
  r.checks.push_back(check_le("mirror symmetry", rep.symmetry_error, num(c, "tolerance")));
  r.checks.push_back(check_le("aborted", static_cast<double>(rep.aborted), 0.0));
  return r;
}

// ---- Stern-Gerlach

ex::SternGerlachParams sg_params(const RunConfig& c, double duration) {
  ex::SternGerlachParams p;
  p.a = num(c, "a");
  p.b = num(c, "b");
  p.d = num(c, "d");
  p.duration = duration;
  return p;
}

Report run_stern_gerlach(const RunConfig& c) {
  const double alpha2 = num(c, "alpha2");
  if (!(alpha2 >= 0.0 && alpha2 <= 1.0)) throw ConfigError("alpha2 must lie in [0, 1]");
  auto p = sg_params(c, num(c, "duration"));
  const auto readout = str(c, "readout");
  if (readout == "spin")
    p.readout = ex::Readout::SpinOperator;
  else if (readout != "sign")
    throw ConfigError("readout must be sign or spin");
  const auto spec = ex::stern_gerlach(p);
  const StateVector psi(CVector{{std::sqrt(alpha2), std::sqrt(1.0 - alpha2)}});
  const auto rec = ex::run(spec, psi, c.n, c.seed);

  Report r;
  r.columns = {"id", "z0", "z_t", "label", "status"};
  for (std::size_t i = 0; i < rec.trials.size(); ++i) {
    const auto& t = rec.trials[i];
    r.add_row({std::to_string(i), fmt(t.initial[0]), fmt(t.final[0]), label_text(t.label), status_name(t.status)});
  }
  r.results = record_json(rec);
  r.results["offset_up"] = ex::stern_gerlach_offset(p, 1);
  r.results["offset_down"] = ex::stern_gerlach_offset(p, -1);
  const double tol = num(c, "tolerance");
  if (p.readout == ex::Readout::Sign) {
    r.results["frequency_plus"] = rec.frequency({1.0});
    r.checks.push_back(check_le("|frequency(+1) - alpha2|", std::abs(rec.frequency({1.0}) - alpha2), tol));
  } else {
    r.checks.push_back(check_le("|mean - <sigma_z>|", std::abs(rec.mean.at(0) - (2 * alpha2 - 1)), tol));
  }
  r.checks.push_back(check_true("aborted fraction <= 0.5%", !rec.flagged));
  return r;
}

// ---- time of flight

Report run_time_of_flight(const RunConfig& c) {
  ex::TimeOfFlightParams p;
  p.d = num(c, "d");
  p.duration = num(c, "duration");
  p.half_width = num(c, "half_width");
  p.points = count(c, "points");
  p.steps = count(c, "steps");
  const auto rep = ex::time_of_flight_momentum(p, ex::time_of_flight_gaussian(p), c.n, c.seed);
  Report r;
  r.columns = {"id", "x0", "x_t", "p", "status"};
  for (std::size_t i = 0; i < rep.record.trials.size(); ++i) {
    const auto& t = rep.record.trials[i];
    r.add_row({std::to_string(i), fmt(t.initial[0]), fmt(t.final[0]), label_text(t.label), status_name(t.status)});
  }
  r.results = record_json(rep.record);
  r.results["tv_sampled"] = rep.tv_sampled;
  r.results["tv_exact"] = rep.tv_exact;
  r.checks.push_back(check_le("tv sampled", rep.tv_sampled, num(c, "tolerance_sampled")));
  r.checks.push_back(check_le("tv exact density", rep.tv_exact, num(c, "tolerance_exact")));
  return r;
}

// ---- 2D oscillator

Report run_oscillator2d(const RunConfig& c) {
  ex::ParadoxParams p;
  p.omega = num(c, "omega");
  p.tau = num(c, "tau");
  p.half_width = num(c, "half_width");
  p.points = count(c, "points");
  const auto rep = ex::oscillator2d_paradox(list(c, "probe_radii"), c.n, c.seed, p);
  Report r;
  r.columns = {"id", "x0", "y0", "x_tau", "y_tau", "displacement", "status"};
  for (std::size_t i = 0; i < rep.trials.size(); ++i) {
    const auto& t = rep.trials[i];
    r.add_row({std::to_string(i), fmt(t.initial[0]), fmt(t.initial[1]), fmt(t.final[0]), fmt(t.final[1]), label_text(t.label),
               status_name(t.status)});
  }
  r.results = {{"angular_velocity_error", rep.angular_velocity_error},
               {"tv", rep.tv},
               {"tv_two_sample", rep.tv_two_sample},
               {"median_displacement", rep.median_displacement},
               {"fraction_displaced", rep.fraction_displaced},
               {"aborted", rep.aborted}};
  r.checks.push_back(check_le("angular velocity error", rep.angular_velocity_error, num(c, "tolerance_angular")));
  r.checks.push_back(check_le("tv(X_tau, |psi|^2)", rep.tv, num(c, "tolerance_tv")));
  r.checks.push_back(check_gt("median |X_tau - X_0|", rep.median_displacement, num(c, "min_median")));
  return r;
}

// ---- EPRB

ex::Direction planar(double deg) {
  const double t = deg * kPi / 180.0;
  return {std::sin(t), 0.0, std::cos(t)};
}

Report run_eprb(const RunConfig& c) {
  ex::EprbParams p;
  p.first = planar(num(c, "first_deg"));
  p.second = planar(num(c, "second_deg"));
  p.a = num(c, "a");
  p.d = num(c, "d");
  p.duration = num(c, "duration");
  p.half_width = num(c, "half_width");
  p.points = count(c, "points");
  const auto rec = ex::eprb_run(p, c.n, c.seed);
  const double expected = 0.5 * (1.0 + std::cos((num(c, "first_deg") - num(c, "second_deg")) * kPi / 180.0));
  const double anti = ex::anticorrelation(rec);

  Report r;
  r.results = record_json(rec);
  r.results["anticorrelation"] = anti;
  r.results["expected"] = expected;
  r.checks.push_back(check_le("|P(Z1 = -Z2) - (1 + cos)/2|", std::abs(anti - expected), num(c, "tolerance")));
  r.checks.push_back(check_true("aborted fraction <= 0.5%", !rec.flagged));

  const double swap = num(c, "swap_deg");
  ex::RunRecord other;
  if (swap >= 0.0) {
    auto q = p;
    q.second = planar(swap);
    other = ex::eprb_run(q, c.n, c.seed);
    const double flip = ex::flip_fraction(rec, other);
    const double expect = ex::eprb_flip_fraction_quadrature(p, q);
    r.results["flip_fraction"] = flip;
    r.results["flip_fraction_expected"] = expect;
    if (swap != num(c, "second_deg")) r.checks.push_back(check_gt("first-wing flip fraction", flip, 0.0));
  }
  r.columns = {"id", "z1_0", "z2_0", "z1_t", "z2_t", "l1", "l2", "status"};
  if (swap >= 0.0) r.columns.push_back("l1_swapped");
  for (std::size_t i = 0; i < rec.trials.size(); ++i) {
    const auto& t = rec.trials[i];
    std::vector<std::string> row{std::to_string(i), fmt(t.initial[0]), fmt(t.initial[1]), fmt(t.final[0]), fmt(t.final[1]),
                                 t.label.empty() ? "" : fmt(t.label[0]), t.label.empty() ? "" : fmt(t.label[1]), status_name(t.status)};
    if (swap >= 0.0) row.push_back(other.trials[i].label.empty() ? "" : fmt(other.trials[i].label[0]));
    r.add_row(std::move(row));
  }
  return r;
}

// ---- Bell

Report run_bell(const RunConfig& c) {
  const auto [a, b, cc] = nogo::planar_directions(num(c, "angles"));
  const double lhs = nogo::bell_lhs(a, b, cc);
  const auto model = nogo::bell_model(a, b, cc);
  const auto cert = nogo::value_map_feasibility(model);
  const bool verified = nogo::verify(model, cert);
  Report r;
  r.results = {{"lhs", lhs},
               {"bound", 1.0},
               {"violated", lhs < 1.0},
               {"terms", {nogo::anticorrelation_probability(a, b), nogo::anticorrelation_probability(b, cc),
                          nogo::anticorrelation_probability(cc, a)}},
               {"certificate", nogo::to_json(model, cert)}};
  r.checks.push_back(check_true("certificate verifies", verified));
  if (lhs < 1.0) r.checks.push_back(check_true("violation implies no noncontextual model", !cert.feasible));
  r.columns = {"first", "second", "x", "y", "probability"};
  for (const auto& d : model.distributions())
    for (const auto& e : d.entries) r.add_row({model.names()[d.first], model.names()[d.second], fmt(e[0]), fmt(e[1]), fmt(e[2])});
  return r;
}

// ---- Hardy

Report run_hardy(const RunConfig& c) {
  nogo::HardySearchOptions o;
  o.grid = count(c, "grid");
  o.step_floor = num(c, "step_floor");
  o.max_evaluations = count(c, "max_evaluations");
  const auto res = nogo::hardy_search(o);
  const auto fresh = nogo::hardy_conditions(res.setup);
  const auto model = nogo::hardy_model(res.setup);
  const auto cert = nogo::value_map_feasibility(model);
  const double recheck = std::max({std::abs(fresh.p - res.claimed.p), std::abs(fresh.a_implies_d - res.claimed.a_implies_d),
                                   std::abs(fresh.b_implies_c - res.claimed.b_implies_c), std::abs(fresh.d_and_c - res.claimed.d_and_c)});
  const double tol = num(c, "tolerance");

  Report r;
  Json amps = Json::array();
  for (Eigen::Index i = 0; i < 4; ++i) amps.push_back({res.setup.state.amplitudes()(i).real(), res.setup.state.amplitudes()(i).imag()});
  auto conditions = [](const nogo::HardyConditions& h) {
    return Json{{"p", h.p}, {"a_implies_d", h.a_implies_d}, {"b_implies_c", h.b_implies_c}, {"d_and_c", h.d_and_c}};
  };
  r.results = {{"p", res.claimed.p},
               {"converged", res.converged},
               {"evaluations", res.evaluations},
               {"state", amps},
               {"a", res.setup.a},
               {"b", res.setup.b},
               {"c", res.setup.c},
               {"d", res.setup.d},
               {"claimed", conditions(res.claimed)},
               {"recomputed", conditions(fresh)},
               {"certificate", nogo::to_json(model, cert)}};
  r.checks.push_back(check_ge("p", res.claimed.p, num(c, "p_min")));
  r.checks.push_back(check_le("p", res.claimed.p, num(c, "p_max")));
  r.checks.push_back(check_le("|P(D=1|A=1) - 1|", std::abs(res.claimed.a_implies_d - 1.0), tol));
  r.checks.push_back(check_le("|P(C=1|B=1) - 1|", std::abs(res.claimed.b_implies_c - 1.0), tol));
  r.checks.push_back(check_le("P(C=1, D=1)", res.claimed.d_and_c, tol));
  r.checks.push_back(check_le("recomputed vs claimed", recheck, 1e-8));
  r.checks.push_back(check_true("no noncontextual model", !cert.feasible));
  r.checks.push_back(check_true("certificate verifies", nogo::verify(model, cert)));
  r.columns = {"quantity", "value"};
  const Json claimed = conditions(res.claimed), recomputed = conditions(fresh);
  for (const auto& [k, v] : claimed.items()) r.add_row({"claimed." + k, fmt(v.get<double>())});
  for (const auto& [k, v] : recomputed.items()) r.add_row({"recomputed." + k, fmt(v.get<double>())});
  const char* names[] = {"a", "b", "c", "d"};
  const ex::Direction dirs[] = {res.setup.a, res.setup.b, res.setup.c, res.setup.d};
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 3; ++i) r.add_row({std::string(names[k]) + "[" + std::to_string(i) + "]", fmt(dirs[k][i])});
  for (int i = 0; i < 4; ++i) {
    r.add_row({"psi[" + std::to_string(i) + "].re", fmt(res.setup.state.amplitudes()(i).real())});
    r.add_row({"psi[" + std::to_string(i) + "].im", fmt(res.setup.state.amplitudes()(i).imag())});
  }
  return r;
}

// ---- formalism suite

CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Report run_formalism_suite(const RunConfig& c) {
  Report r;
  const HermitianOperator sz(hilbert::pauli_z()), sx(hilbert::pauli_x()), sy(hilbert::pauli_y());
  const auto z = fm::ideal_measurement(sz), x = fm::ideal_measurement(sx);
  const auto id = hilbert::UnitaryOperator::identity(2);

  // Sequential (z, x, z): formula against chained sampling.
  const StateVector psi(CVector{{std::cos(0.4), std::polar(std::sin(0.4), 0.9)}});
  const auto exact = fm::sequential_probability({z, x, z}, {id, id, id}, psi);
  std::map<fm::LabelTuple, std::size_t> tally;
  for (std::size_t i = 0; i < c.n; ++i) {
    Rng rng(c.seed, i);
    StateVector s = psi;
    fm::LabelTuple t;
    for (const auto* m : {&z, &x, &z}) {
      auto res = fm::strong_measure(*m, s, rng);
      t.push_back(fm::canonical(res.label));
      s = res.post_state;
    }
    ++tally[t];
  }
  double worst_z = 0.0;
  bool impossible_seen = false;
  const double n = static_cast<double>(c.n);
  for (const auto& [t, p] : exact) {
    const double f = tally.count(t) ? static_cast<double>(tally.at(t)) / n : 0.0;
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    if (sigma == 0.0) {
      impossible_seen |= f != p;
      continue;
    }
    worst_z = std::max(worst_z, std::abs(f - p) / sigma);
  }
  for (const auto& [t, k] : tally) impossible_seen |= !exact.count(t);
  r.checks.push_back(check_le("sequential: max |freq - p| / sigma", worst_z, 3.0));
  r.checks.push_back(check_true("sequential: no impossible tuple sampled", !impossible_seen));

  // Marginalizing the middle x result does not give the (z, z) law on x+;
  // explicit projector products as the reference.
  const StateVector xplus(CVector::Constant(2, std::sqrt(0.5)));
  const CMatrix pz[2] = {diag2(1, 0), diag2(0, 1)};
  const CMatrix px[2] = {(hilbert::identity(2) + hilbert::pauli_x()) / 2.0, (hilbert::identity(2) - hilbert::pauli_x()) / 2.0};
  double discrepancy = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double marg = 0.0;
      for (int m = 0; m < 2; ++m) marg += (pz[b] * px[m] * pz[a] * xplus.amplitudes()).squaredNorm();
      discrepancy = std::max(discrepancy, std::abs(marg - (pz[b] * pz[a] * xplus.amplitudes()).squaredNorm()));
    }
  r.checks.push_back(check_ge("sum rule: marginalization discrepancy", discrepancy, 0.1));

  // Closure of every construction.
  std::vector<double> edges;
  for (int i = 0; i <= 24; ++i) edges.push_back(-3.0 + 0.25 * i);
  const std::vector<std::pair<std::string, fm::Povm>> povms = {
      {"ideal", fm::povm_of(z)},
      {"approximate", fm::approximate_povm(sz, 0.3, edges)},
      {"weak transformers", fm::povm_of(fm::weak_transformers(sz, 0.3, edges))},
      {"shift", fm::povm_of(fm::shift_experiment(4))},
      {"coin flip", fm::povm_of(fm::coin_flip_experiment(3, {std::sqrt(0.2), std::sqrt(0.8)}, {{0.0}, {1.0}}))},
      {"joint", fm::joint_pvm({hilbert::tensor_product(sz, HermitianOperator(hilbert::identity(2))),
                               hilbert::tensor_product(HermitianOperator(hilbert::identity(2)), sz)})
                    .as_povm()}};
  for (const auto& [name, p] : povms) r.checks.push_back(check_le("closure: " + name, p.closure_residual(), 1e-10));

  // Density matrices.
  Rng rng(c.seed, c.n);
  auto random_state = [&](int d) {
    CVector v(d);
    for (auto& e : v) e = Complex(rng.normal(), rng.normal());
    return StateVector(v).normalized();
  };
  const auto psi1 = random_state(3), psi2 = random_state(3);
  const double w1 = 0.3, w2 = 0.7;
  CMatrix d3 = CMatrix::Zero(3, 3);
  d3(0, 0) = 1, d3(1, 1) = 1, d3(2, 2) = 2;
  const auto meas = fm::ideal_measurement(HermitianOperator(d3));
  const auto mixed = fm::density_update(fm::ensemble_density({{w1, psi1}, {w2, psi2}}), meas, {1.0});
  const auto u1 = fm::density_update(hilbert::DensityMatrix::pure(psi1), meas, {1.0});
  const auto u2 = fm::density_update(hilbert::DensityMatrix::pure(psi2), meas, {1.0});
  const double pm = w1 * u1.probability + w2 * u2.probability;
  const CMatrix mix = (w1 * u1.probability / pm) * u1.state.matrix() + (w2 * u2.probability / pm) * u2.state.matrix();
  r.checks.push_back(check_le("density: update of mixture vs mixture of updates", hilbert::max_abs(mixed.state.matrix() - mix), 1e-12));

  const std::size_t dims[] = {2, 2};
  const auto reduced = hilbert::partial_trace(hilbert::DensityMatrix::pure(hilbert::singlet()), 0, dims);
  r.checks.push_back(check_le("density: singlet reduced state vs I/2", hilbert::max_abs(reduced.matrix() - hilbert::identity(2) / 2.0), 1e-12));

  const StateVector xm(CVector{{std::sqrt(0.5), -std::sqrt(0.5)}});
  const auto ea = fm::ensemble_density({{0.5, hilbert::spin_up()}, {0.5, hilbert::spin_down()}});
  const auto eb = fm::ensemble_density({{0.5, xplus}, {0.5, xm}});
  double stat_gap = 0.0;
  for (const auto& m : {fm::povm_of(z), fm::povm_of(x), fm::povm_of(fm::ideal_measurement(sy)), fm::approximate_povm(sx, 0.3, edges)}) {
    const auto grouped = m.grouped();
    for (const auto& o : grouped.outcomes()) {
      const auto pred = fm::label_in({o.label});
      stat_gap = std::max(stat_gap, std::abs(fm::born_probability(m, ea, pred) - fm::born_probability(m, eb, pred)));
    }
  }
  r.checks.push_back(check_le("density: equal W gives equal statistics", stat_gap, 1e-12));

  r.results = {{"sequential_max_z", worst_z}, {"sum_rule_discrepancy", discrepancy}};
  r.columns = {"check", "value", "relation", "bound", "passed"};
  for (const auto& k : r.checks) r.add_row({k.name, fmt(k.value), k.relation, fmt(k.bound), k.passed ? "true" : "false"});
  return r;
}

// ---- POVM extraction

Report run_povm_extract(const RunConfig& c) {
  const auto durations = list(c, "durations");
  if (durations.empty()) throw ConfigError("durations must not be empty");
  Report r;
  r.columns = {"duration", "p_plus", "p_minus", "off_diagonal", "closure", "pvm_distance"};
  Json rows = Json::array();
  std::vector<double> pp, pmn;
  double last_distance = 0.0;
  for (double t : durations) {
    const auto spec = ex::stern_gerlach(sg_params(c, t));
    const auto povm = ex::povm_of_experiment(spec, std::vector<StateVector>{hilbert::spin_up(), hilbert::spin_down()});
    CMatrix up = CMatrix::Zero(2, 2);
    const auto grouped = povm.grouped();
    for (const auto& o : grouped.outcomes())
      if (fm::same_label(o.label, {1.0})) up = o.op;
    const CMatrix down = hilbert::identity(2) - up;
    const double dist = std::max(hilbert::max_abs(up - diag2(1, 0)), hilbert::max_abs(down - diag2(0, 1)));
    pp.push_back(up(0, 0).real());
    pmn.push_back(up(1, 1).real());
    last_distance = dist;
    r.checks.push_back(check_le("closure at T=" + fmt(t), povm.closure_residual(), 1e-4));
    r.add_row({fmt(t), fmt(pp.back()), fmt(pmn.back()), fmt(std::abs(up(0, 1))), fmt(povm.closure_residual()), fmt(dist)});
    rows.push_back({{"duration", t}, {"p_plus", pp.back()}, {"p_minus", pmn.back()}, {"pvm_distance", dist}, {"warnings", spec.warnings}});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < pp.size(); ++i) monotone &= pp[i] >= pp[i - 1] && pmn[i] <= pmn[i - 1];
  r.checks.push_back(check_true("p+ rises and p- falls with T", monotone));
  r.checks.push_back(check_le("max |O_T - P| at the largest T", last_distance, num(c, "tolerance")));
  r.results = {{"durations", rows}};
  return r;
}

std::vector<Command> make_commands() {
  std::vector<Command> out;
  out.push_back({"equivariance",
                 "Equivariance of the |psi|^2 distribution: samples configurations, moves them along the guiding "
                 "field and compares them with |psi_t|^2 in total variation.",
                 true, true, 7, 20000,
                 {{"scenario", "trap", "trap (two-level superposition in a harmonic trap), free (moving Gaussian) or control (t = 0)"},
                  {"bins", 64, "histogram bins"},
                  {"tolerance", 0.02, "largest allowed total variation"}},
                 "id, x0, x_t, status",
                 run_equivariance});
  out.push_back({"coupled-oscillator",
                 "Two coupled particles with H = -(d_x^2 + d_y^2)/2 + (x - y)^2/4: solver trajectories against "
                 "X_t = a(t)X + b(t)Y, Y_t = b(t)X + a(t)Y.",
                 true, true, 1, 100,
                 {{"half_width", 20.0, "grid half width"},
                  {"points", 256, "grid points per axis"},
                  {"dt", 0.005, "time step"},
                  {"duration", 5.0, "final time"},
                  {"tolerance", 1e-4, "largest allowed trajectory error"}},
                 "id, x0, y0, x_t, y_t, max_error",
                 run_coupled});
  out.push_back({"stern-gerlach",
                 "Stern-Gerlach experiment on sqrt(alpha2)|up> + sqrt(1 - alpha2)|down>: Monte Carlo readout of "
                 "the deflection, compared with the Born weights.",
                 true, true, 11, 10000,
                 {{"alpha2", 0.7, "weight of spin up"},
                  {"a", 4.0, "field gradient"},
                  {"b", 0.0, "field offset"},
                  {"d", 1.0, "initial packet width"},
                  {"duration", 2.0, "time in the field"},
                  {"readout", "sign", "sign (+-1 from the side of z = 0) or spin (2 m z / a T^2)"},
                  {"tolerance", 0.015, "allowed deviation of the frequency (or mean) from the Born value"}},
                 "id, z0, z_t, label, status",
                 run_stern_gerlach});
  out.push_back({"time-of-flight",
                 "Momentum by time of flight: free motion for T and the readout m X_T / T, compared with "
                 "|psi~(p)|^2.",
                 true, true, 5, 20000,
                 {{"d", 1.0, "initial width"},
                  {"duration", 50.0, "flight time"},
                  {"half_width", 200.0, "grid half width"},
                  {"points", 2048, "grid points"},
                  {"steps", 500, "solver steps"},
                  {"tolerance_sampled", 0.03, "allowed tv of the sampled readout"},
                  {"tolerance_exact", 0.01, "allowed tv of the pushed-forward density"}},
                 "id, x0, x_t, p, status",
                 run_time_of_flight});
  out.push_back({"oscillator2d",
                 "Stationary vortex r e^{i phi} e^{-r^2/2} of the 2D oscillator: X_tau and X_0 share the |psi|^2 "
                 "law although each configuration rotates.",
                 true, true, 3, 20000,
                 {{"omega", 1.0, "trap frequency"},
                  {"tau", 1.0, "transport time"},
                  {"half_width", 8.0, "grid half width"},
                  {"points", 256, "grid points per axis"},
                  {"probe_radii", Json::array({0.5, 1.0, 2.0}), "radii where the angular velocity is probed"},
                  {"tolerance_angular", 1e-6, "allowed relative angular velocity error"},
                  {"tolerance_tv", 0.02, "allowed tv between X_tau and |psi|^2"},
                  {"min_median", 0.05, "median displacement must exceed this"}},
                 "id, x0, y0, x_tau, y_tau, displacement, status",
                 run_oscillator2d});
  out.push_back({"eprb",
                 "EPR-Bohm pair in the singlet with Stern-Gerlach readout on both wings; settings are angles in the "
                 "x-z plane. swap_deg >= 0 reruns with that second setting and the same seed.",
                 true, true, 13, 10000,
                 {{"first_deg", 0.0, "first wing setting"},
                  {"second_deg", 120.0, "second wing setting"},
                  {"swap_deg", -1.0, "alternative second setting (negative: off)"},
                  {"a", 2.0, "field gradient"},
                  {"d", 1.25, "initial packet width"},
                  {"duration", 3.0, "time in the fields"},
                  {"half_width", 22.0, "grid half width"},
                  {"points", 128, "grid points per axis"},
                  {"tolerance", 0.015, "allowed deviation of P(Z1 = -Z2) from (1 + cos)/2"}},
                 "id, z1_0, z2_0, z1_t, z2_t, l1, l2, status[, l1_swapped]",
                 run_eprb});
  out.push_back({"bell",
                 "Bell inequality for the singlet with three coplanar settings, and the linear-programming search "
                 "for a noncontextual model of the nine cross-wing pair distributions.",
                 false, false, 0, 0,
                 {{"angles", 120.0, "angle between successive settings in degrees"}},
                 "first, second, x, y, probability",
                 run_bell});
  out.push_back({"hardy",
                 "Hardy's nonlocality: optimizes two-qubit states and spin directions for P(A=1, B=1) under "
                 "A=1 => D=1, B=1 => C=1, P(C=1, D=1) = 0, and certifies that no noncontextual model exists.",
                 false, false, 0, 0,
                 {{"grid", 16, "coarse grid points per angle"},
                  {"step_floor", 1e-8, "smallest refinement step"},
                  {"max_evaluations", 2000000, "evaluation budget"},
                  {"p_min", 0.085, "lower bound on p"},
                  {"p_max", 0.095, "upper bound on p"},
                  {"tolerance", 1e-6, "tolerance on the three conditions"}},
                 "quantity, value",
                 run_hardy});
  out.push_back({"formalism-suite",
                 "Operator formalism checks: sequential measurement law against sampling, the sum-rule failure, "
                 "closure of every construction and density-matrix consistency.",
                 true, true, 17, 10000, {}, "check, value, relation, bound, passed", run_formalism_suite});
  out.push_back({"povm-extract",
                 "POVM of the Stern-Gerlach experiment by quadrature for a list of field times, approaching the "
                 "sigma_z projections.",
                 false, false, 0, 0,
                 {{"a", 4.0, "field gradient"},
                  {"b", 0.0, "field offset"},
                  {"d", 1.0, "initial packet width"},
                  {"durations", Json::array({0.5, 1.0, 2.0, 4.0}), "field times"},
                  {"tolerance", 1e-3, "allowed distance to the projections at the largest time"}},
                 "duration, p_plus, p_minus, off_diagonal, closure, pvm_distance",
                 run_povm_extract});
  return out;
}

std::string type_label(const Json& v) {
  if (v.is_number_integer()) return "INT";
  if (v.is_number()) return "NUMBER";
  if (v.is_boolean()) return "BOOL";
  if (v.is_array()) return "LIST";
  return "TEXT";
}

std::string flag_name(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> all = make_commands();
  return all;
}

const Command& find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw ConfigError("unknown command " + name);
}

int run_command(int argc, char** argv) {
  CLI::App app{"Bohmian mechanics and quantum measurement: experiments, checks and no-go results.", "pilotwave"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Flags {
    std::string config, out, seed, n, threads;
    std::map<std::string, std::string> params;
  };
  std::map<std::string, Flags> flags;
  for (const auto& cmd : commands()) {
    auto& f = flags[cmd.name];
    auto* sub = app.add_subcommand(cmd.name, cmd.description);
    sub->add_option("--config", f.config, "JSON config {experiment, seed, n, threads, params}")->type_name("FILE");
    if (cmd.uses_seed)
      sub->add_option("--seed", f.seed, "RNG seed (default " + std::to_string(cmd.default_seed) + ")")->type_name("UINT");
    if (cmd.uses_n) sub->add_option("--n", f.n, "trials (default " + std::to_string(cmd.default_n) + ")")->type_name("UINT");
    sub->add_option("--out", f.out, "output directory for <command>.json and <command>.csv (default .)")->type_name("DIR");
    sub->add_option("--threads", f.threads, "worker threads, 0 = all cores; results do not depend on it")->type_name("UINT");
    for (const auto& p : cmd.params)
      sub->add_option(flag_name(p.name), f.params[p.name], p.help + " (default " + p.value.dump() + ")")
          ->type_name(type_label(p.value));
    sub->footer("CSV columns: " + cmd.csv_columns + "\nExit codes: 0 pass, 1 check failed, 2 config error, 3 numerical guard.");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kConfigError;
  }

  const auto* sub = app.get_subcommands().front();
  const Command& cmd = find_command(sub->get_name());
  const auto& f = flags[cmd.name];
  try {
    RunConfig cfg = parse_config(cmd, f.config.empty() ? Json::object() : load_json(f.config));
    if (!f.seed.empty()) cfg.seed = parse_value(Json(std::uint64_t{0}), f.seed, "seed").get<std::uint64_t>();
    if (!f.n.empty()) {
      cfg.n = parse_value(Json(std::uint64_t{0}), f.n, "n").get<std::size_t>();
      if (cfg.n == 0) throw ConfigError("--n must be positive");
    }
    if (!f.threads.empty()) cfg.threads = parse_value(Json(std::uint64_t{0}), f.threads, "threads").get<unsigned>();
    if (!f.out.empty()) cfg.out = f.out;
    for (const auto& p : cmd.params)
      if (const auto& text = f.params.at(p.name); !text.empty()) cfg.params[p.name] = parse_value(p.value, text, p.name);

    set_default_threads(cfg.threads);
    const auto start = std::chrono::steady_clock::now();
    const Report report = cmd.execute(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit_report(cmd, cfg, report, wall);
    std::cout << summary_json(cmd, cfg, report, wall).dump(2) << "\n";
    for (const auto& c : report.checks)
      if (!c.passed) std::cerr << "check failed: " << c.name << " = " << fmt(c.value) << " (" << c.relation << " " << fmt(c.bound) << ")\n";
    return report.passed() ? kPass : kAssertionFailed;
  } catch (const NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return kNumericalGuard;
  } catch (const MeasurementError& e) {
    std::cerr << "measurement error: " << e.what() << "\n";
    return kNumericalGuard;
  } catch (const CoverageError& e) {
    std::cerr << "coverage error: " << e.what() << "\n";
    return kNumericalGuard;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumericalGuard;
  }
}

}  // namespace pilotwave::cli
