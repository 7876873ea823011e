#pragma once

// AC/DC hybrid network data model: buses, branches, VSCs, storage
// placements, daily scenarios and the TOU tariff.  Everything is
// validated once at load time and treated as immutable afterwards, so
// the structures can be shared read-only across solver workers.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridstor {

inline constexpr int kHoursPerDay = 24;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BusKind { Ac, Dc };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::Ac;
  std::string subsystem;   // "ac1", "ac2", ..., "dc"
  double base_kv = 10.0;
  double v_min = 0.97;     // p.u.
  double v_max = 1.03;     // p.u.
  bool slack = false;
  double mu_impor = 0.0;   // important-load ratio in [0,1]
};

struct Branch {
  int from = 0;            // sending end
  int to = 0;              // receiving end
  double r_ohm = 0.0;
  double x_ohm = 0.0;      // zero for DC branches
  double i_max_a = 500.0;
};

enum class VscMode { UdcQ, PQ };

struct Vsc {
  int ac_bus = 0;
  int dc_bus = 0;
  double s_kva = 0.0;
  double p_max_kw = 0.0;
  double q_max_kvar = 0.0;
  VscMode mode = VscMode::PQ;
  double eta_loss = 0.03;
};

enum class StorageKind { Sess, Mess };

// Candidate storage site from the [placements] section.  Stage-1 sizes
// SESS within [e_min,e_max]x[p_min,p_max]; stage-2 picks a module count
// in [0, n_mess_max] for MESS sites.
struct Placement {
  int node = 0;
  StorageKind kind = StorageKind::Sess;
  double e_min_kwh = 0.0;
  double e_max_kwh = 0.0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  int n_mess_max = 0;
  int n_cess = 1;          // containers per site (thermal units)
  bool colocated = false;
};

struct HybridNetwork {
  double base_kva = 1000.0;
  std::vector<Bus> buses;
  std::vector<Branch> ac_branches;
  std::vector<Branch> dc_branches;
  std::vector<Vsc> vscs;
  std::vector<Placement> placements;

  const Bus& bus(int id) const;
  bool has_bus(int id) const;
  bool is_dc(int id) const;
  int ac_bus_count() const;
  int dc_bus_count() const;

  // Per-unit conversion on the bus's declared base.
  double z_base_ohm(int bus_id) const;   // base_kv^2 * 1000 / base_kva
  double i_base_a(int bus_id) const;     // base_kva / base_kv (single-phase equivalent)

  // Adjacency over both AC and DC branches.
  std::vector<int> neighbors(int bus_id) const;

  void validate() const;  // throws ValidationError
};

struct Tariff {
  struct Band {
    int start_hour = 0;  // inclusive
    int end_hour = 0;    // exclusive
    double price = 0.0;  // $/kWh
  };
  std::vector<Band> bands;

  double price_at(int hour) const;  // throws on hour outside [0,24)
  void validate() const;            // bands must partition [0,24)
};

enum class StageTag { Stage1, Stage2 };

struct Scenario {
  std::string id;
  int days = 1;            // D_w: days/year (stage 1) or event days (stage 2)
  StageTag stage = StageTag::Stage1;
  // node id -> hourly series (kW / kvar); absent nodes mean zero.
  std::map<int, std::array<double, kHoursPerDay>> load_p_kw;
  std::map<int, std::array<double, kHoursPerDay>> load_q_kvar;
  std::map<int, std::array<double, kHoursPerDay>> pv_kw;
  std::array<double, kHoursPerDay> price{};    // $/kWh
  std::array<double, kHoursPerDay> temp_k{};   // ambient, Kelvin
  std::array<double, kHoursPerDay> wind_ms{};
};

HybridNetwork load_network(const std::string& path);
void save_network(const HybridNetwork& net, const std::string& path);

Tariff load_tariff(const std::string& path);
Scenario load_scenario(const std::string& path);

// Checks that every node the scenario references exists in the network
// and that series values are sane; returns the scenario unchanged.
const Scenario& validate_scenario(const Scenario& s, const HybridNetwork& n);

// Default TOU bands from the deployment the model was tuned on:
// off-peak 23-07 @ 0.044, flat 07-17 @ 0.116, peak 17-23 @ 0.196 $/kWh.
Tariff default_tariff();

}  // namespace gridstor
