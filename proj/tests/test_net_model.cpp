#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "gridstor/net_model.hpp"

using namespace gridstor;
namespace fs = std::filesystem;

namespace {

HybridNetwork small_hybrid() {
  HybridNetwork n;
  n.base_kva = 1000.0;
  auto ac = [](int id, const char* sub, bool slack, double mu) {
    Bus b;
    b.id = id;
    b.kind = BusKind::Ac;
    b.subsystem = sub;
    b.slack = slack;
    b.mu_impor = mu;
    return b;
  };
  auto dc = [](int id, bool slack) {
    Bus b;
    b.id = id;
    b.kind = BusKind::Dc;
    b.subsystem = "dc";
    b.slack = slack;
    return b;
  };
  n.buses = {ac(6, "ac1", true, 0.0), ac(7, "ac1", false, 0.0), ac(8, "ac1", false, 0.4),
             dc(1, false), dc(2, false)};
  n.ac_branches = {{6, 7, 0.3, 0.4, 500.0}, {7, 8, 0.2, 0.25, 500.0}};
  n.dc_branches = {{1, 2, 0.15, 0.0, 500.0}};
  Vsc v;
  v.ac_bus = 7;
  v.dc_bus = 1;
  v.s_kva = 2000;
  v.p_max_kw = 2000;
  v.q_max_kvar = 2000;
  v.mode = VscMode::UdcQ;
  n.vscs = {v};
  Placement p;
  p.node = 8;
  p.kind = StorageKind::Sess;
  p.e_max_kwh = 8000;
  p.p_max_kw = 2000;
  n.placements = {p};
  return n;
}

fs::path temp_file(const char* stem) {
  return fs::temp_directory_path() / (std::string("gridstor_") + stem + "_" +
                                      std::to_string(::getpid()) + ".txt");
}

}  // namespace

TEST_CASE("valid hybrid network passes validation") {
  CHECK_NOTHROW(small_hybrid().validate());
}

TEST_CASE("per-unit bases") {
  HybridNetwork n = small_hybrid();
  CHECK(n.z_base_ohm(6) == doctest::Approx(100.0));  // 10kV, 1000 kVA
  CHECK(n.i_base_a(6) == doctest::Approx(100.0));
  CHECK(n.ac_bus_count() == 3);
  CHECK(n.dc_bus_count() == 2);
}

TEST_CASE("cycle is rejected with the offending loop named") {
  HybridNetwork n = small_hybrid();
  n.ac_branches.push_back({6, 8, 0.1, 0.1, 500.0});
  try {
    n.validate();
    FAIL("cycle accepted");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("not radial") != std::string::npos);
    CHECK(msg.find("cycle") != std::string::npos);
  }
}

TEST_CASE("disconnected subsystem is rejected") {
  HybridNetwork n = small_hybrid();
  n.ac_branches.pop_back();  // strands bus 8
  CHECK_THROWS_AS(n.validate(), ValidationError);
}

TEST_CASE("AC subsystem needs exactly one slack") {
  HybridNetwork n = small_hybrid();
  n.buses[1].slack = true;
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n.buses[1].slack = false;
  n.buses[0].slack = false;
  CHECK_THROWS_AS(n.validate(), ValidationError);
}

TEST_CASE("DC subsystem requires a Udc-Q converter") {
  HybridNetwork n = small_hybrid();
  n.vscs[0].mode = VscMode::PQ;
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n.vscs.clear();
  CHECK_THROWS_AS(n.validate(), ValidationError);
}

TEST_CASE("importance ratio outside [0,1] is rejected") {
  HybridNetwork n = small_hybrid();
  n.buses[2].mu_impor = 1.2;
  CHECK_THROWS_AS(n.validate(), ValidationError);
}

TEST_CASE("network file round-trip preserves the model") {
  HybridNetwork n = small_hybrid();
  auto p = temp_file("net");
  save_network(n, p.string());
  HybridNetwork m = load_network(p.string());
  fs::remove(p);
  CHECK(m.buses.size() == n.buses.size());
  CHECK(m.ac_branches.size() == n.ac_branches.size());
  CHECK(m.dc_branches.size() == n.dc_branches.size());
  CHECK(m.vscs.size() == 1);
  CHECK(m.vscs[0].mode == VscMode::UdcQ);
  CHECK(m.placements.size() == 1);
  CHECK(m.bus(8).mu_impor == doctest::Approx(0.4));
  CHECK(m.is_dc(1));
  CHECK(!m.is_dc(6));
}

TEST_CASE("default tariff covers the day with three price levels") {
  Tariff t = default_tariff();
  CHECK_NOTHROW(t.validate());
  CHECK(t.price_at(3) == doctest::Approx(0.044));
  CHECK(t.price_at(12) == doctest::Approx(0.116));
  CHECK(t.price_at(20) == doctest::Approx(0.196));
  CHECK(t.price_at(23) == doctest::Approx(0.044));
  CHECK_THROWS(t.price_at(24));
}

TEST_CASE("tariff with a gap is rejected") {
  Tariff t;
  t.bands = {{0, 10, 0.1}, {11, 24, 0.2}};
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("scenario CSV loads with metadata and kelvin conversion") {
  auto p = temp_file("scen");
  {
    std::ofstream f(p);
    f << "# id winter\n# days 180\n# stage stage1\n";
    f << "hour,load_p_8,load_q_8,pv_2,price,temp_c,wind_ms\n";
    for (int h = 0; h < 24; ++h)
      f << h << ",100,20," << (h >= 8 && h <= 16 ? 50 : 0) << ",0.116,-5,4\n";
  }
  Scenario s = load_scenario(p.string());
  fs::remove(p);
  CHECK(s.id == "winter");
  CHECK(s.days == 180);
  CHECK(s.stage == StageTag::Stage1);
  CHECK(s.load_p_kw.at(8)[0] == doctest::Approx(100.0));
  CHECK(s.pv_kw.at(2)[12] == doctest::Approx(50.0));
  CHECK(s.temp_k[0] == doctest::Approx(268.15));
  CHECK(s.wind_ms[5] == doctest::Approx(4.0));

  HybridNetwork n = small_hybrid();
  CHECK_NOTHROW(validate_scenario(s, n));

  Scenario bad = s;
  bad.load_p_kw[99] = bad.load_p_kw[8];
  CHECK_THROWS_AS(validate_scenario(bad, n), ValidationError);

  Scenario qdc = s;
  qdc.load_q_kvar[1] = qdc.load_q_kvar[8];  // reactive load on a DC node
  CHECK_THROWS_AS(validate_scenario(qdc, n), ValidationError);
}

TEST_CASE("scenario with wrong row count is rejected") {
  auto p = temp_file("short");
  {
    std::ofstream f(p);
    f << "hour,price,temp_c,wind_ms\n0,0.1,10,0\n1,0.1,10,0\n";
  }
  CHECK_THROWS_AS(load_scenario(p.string()), ValidationError);
  fs::remove(p);
}
