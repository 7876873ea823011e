#include <doctest.h>

#include <cmath>

#include "gridstor/storage_model.hpp"

using namespace gridstor;

namespace {

BessRating rating_1mwh() {
  BessRating r;
  r.e_rate_kwh = 1000.0;
  r.p_rate_kw = 500.0;
  r.q_rate_kvar = 500.0;
  r.s_pcs_kva = 500.0;
  return r;
}

}  // namespace

TEST_CASE("idle device holds its state of charge") {
  BessRating r = rating_1mwh();
  CHECK(soc_step(0.5, {}, r) == doctest::Approx(0.5));
}

TEST_CASE("discharge pulls efficiency-inflated energy from the cells") {
  BessRating r = rating_1mwh();
  BessSetpoint sp;
  sp.p_dis_kw = 100.0;
  sp.mu_dis = true;
  // 0.5 - 100/(0.976*0.95)/1000, computed independently
  double expect = 0.5 - 100.0 / (0.976 * 0.95) / 1000.0;
  CHECK(soc_step(0.5, sp, r) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(soc_step(0.5, sp, r) == doctest::Approx(0.39215).epsilon(1e-4));
}

TEST_CASE("charge banks efficiency-shrunk energy") {
  BessRating r = rating_1mwh();
  BessSetpoint sp;
  sp.p_ch_kw = -100.0;
  CHECK(soc_step(0.5, sp, r) == doctest::Approx(0.59272).epsilon(1e-7));
}

TEST_CASE("self-discharge decays the stored fraction") {
  BessRating r = rating_1mwh();
  r.self_discharge = 0.01;
  CHECK(soc_step(0.5, {}, r) == doctest::Approx(0.495));
}

TEST_CASE("zero-capacity device is rejected") {
  BessRating r = rating_1mwh();
  r.e_rate_kwh = 0.0;
  CHECK_THROWS_AS(soc_step(0.5, {}, r), ValidationError);
}

TEST_CASE("PCS envelope is a disk in net P and Q") {
  BessRating r = rating_1mwh();
  BessSetpoint sp;
  CHECK(pcs_feasible(sp, r));  // idle
  sp.p_dis_kw = 400.0;
  sp.q_kvar = 300.0;
  CHECK(pcs_feasible(sp, r));  // 3-4-5 boundary
  sp.q_kvar = 301.0;
  CHECK(!pcs_feasible(sp, r));
}

TEST_CASE("PCS feasibility is scale-monotone") {
  BessRating r = rating_1mwh();
  BessSetpoint sp;
  sp.p_dis_kw = 400.0;
  sp.q_kvar = 300.0;
  REQUIRE(pcs_feasible(sp, r));
  for (double a : {0.9, 0.5, 0.1, 0.0}) {
    BessSetpoint scaled;
    scaled.p_dis_kw = a * sp.p_dis_kw;
    scaled.q_kvar = a * sp.q_kvar;
    CHECK(pcs_feasible(scaled, r));
  }
}

TEST_CASE("reactive limit binds independently of the disk") {
  BessRating r = rating_1mwh();
  r.q_rate_kvar = 100.0;
  BessSetpoint sp;
  sp.q_kvar = 150.0;
  CHECK(!pcs_feasible(sp, r));
}

TEST_CASE("important-load reserve floor") {
  BessRating r = rating_1mwh();
  r.e_rate_kwh = 3000.0;
  r.kind = StorageKind::Mess;
  std::array<double, kHoursPerDay> load{};
  load.fill(200.0);
  double floor = mess_min_soc(5, load, r, 0.6);
  // 0.6*(200+200)/(3000*0.976*0.95), computed independently
  CHECK(floor == doctest::Approx(0.6 * 400.0 / (3000.0 * 0.976 * 0.95)).epsilon(1e-12));
  CHECK(floor == doctest::Approx(0.08628).epsilon(1e-3));
  CHECK(mess_min_soc(5, load, r, 0.0) == doctest::Approx(0.0));
  // linear in the importance ratio
  CHECK(mess_min_soc(5, load, r, 1.0) == doctest::Approx(floor / 0.6).epsilon(1e-12));
  // hour 23 wraps to hour 0
  load[23] = 100.0;
  load[0] = 300.0;
  CHECK(mess_min_soc(23, load, r, 1.0) ==
        doctest::Approx(400.0 / (3000.0 * 0.976 * 0.95)).epsilon(1e-12));
}

TEST_CASE("trajectory checker flags bounds and periodicity") {
  BessRating r = rating_1mwh();
  SocTrajectory traj;
  traj.soc.assign(25, 0.5);
  CHECK(check_trajectory(traj, r, {}).empty());

  traj.soc[24] = 0.51;
  auto v = check_trajectory(traj, r, {});
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == SocViolation::Periodicity);

  traj.soc.assign(25, 0.5);
  traj.soc[10] = 0.05;
  v = check_trajectory(traj, r, {});
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == SocViolation::BelowFloor);
  CHECK(v[0].hour == 10);

  traj.soc.assign(25, 0.5);
  std::vector<double> floors(25, 0.0);
  floors[7] = 0.6;  // reserve floor above the trajectory at one hour
  v = check_trajectory(traj, r, floors);
  REQUIRE(v.size() == 1);
  CHECK(v[0].hour == 7);
}

TEST_CASE("round-trip energy accounting matches the SOC ledger") {
  BessRating r = rating_1mwh();
  std::vector<BessSetpoint> plan(24);
  for (int t = 0; t < 6; ++t) plan[t].p_ch_kw = -200.0;
  for (int t = 17; t < 21; ++t) {
    plan[t].p_dis_kw = 150.0;
    plan[t].mu_dis = true;
  }
  double soc = 0.3, e_in = 0.0, e_out = 0.0;
  for (const auto& sp : plan) {
    soc = soc_step(soc, sp, r);
    e_in += -sp.p_ch_kw * r.eta_c * r.eta_pcs;
    e_out += sp.p_dis_kw / (r.eta_d * r.eta_pcs);
  }
  CHECK(soc - 0.3 == doctest::Approx((e_in - e_out) / r.e_rate_kwh).epsilon(1e-12));
}

TEST_CASE("rating invariants are enforced") {
  BessRating r = rating_1mwh();
  CHECK_NOTHROW(r.validate());
  r.soc_min = 0.95;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r = rating_1mwh();
  r.eta_pcs = 1.2;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r = rating_1mwh();
  r.soc0 = 0.05;
  CHECK_THROWS_AS(r.validate(), ValidationError);
}
