#include "gridstor/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gridstor {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream is(line);
  while (is >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

double to_double(const std::string& s, const std::string& field) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) fail("bad numeric value '" + s + "' for " + field);
    return v;
  } catch (const std::invalid_argument&) {
    fail("bad numeric value '" + s + "' for " + field);
  } catch (const std::out_of_range&) {
    fail("numeric value out of range '" + s + "' for " + field);
  }
}

int to_int(const std::string& s, const std::string& field) {
  double v = to_double(s, field);
  if (v != std::floor(v)) fail("expected integer for " + field + ", got '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

const Bus& HybridNetwork::bus(int id) const {
  for (const Bus& b : buses)
    if (b.id == id) return b;
  fail("unknown bus id " + std::to_string(id));
}

bool HybridNetwork::has_bus(int id) const {
  return std::any_of(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
}

bool HybridNetwork::is_dc(int id) const { return bus(id).kind == BusKind::Dc; }

int HybridNetwork::ac_bus_count() const {
  return static_cast<int>(std::count_if(buses.begin(), buses.end(),
                                        [](const Bus& b) { return b.kind == BusKind::Ac; }));
}

int HybridNetwork::dc_bus_count() const {
  return static_cast<int>(buses.size()) - ac_bus_count();
}

double HybridNetwork::z_base_ohm(int bus_id) const {
  const Bus& b = bus(bus_id);
  return b.base_kv * b.base_kv * 1000.0 / base_kva;
}

double HybridNetwork::i_base_a(int bus_id) const {
  const Bus& b = bus(bus_id);
  return base_kva / b.base_kv;
}

std::vector<int> HybridNetwork::neighbors(int bus_id) const {
  std::vector<int> out;
  for (const Branch& br : ac_branches) {
    if (br.from == bus_id) out.push_back(br.to);
    if (br.to == bus_id) out.push_back(br.from);
  }
  for (const Branch& br : dc_branches) {
    if (br.from == bus_id) out.push_back(br.to);
    if (br.to == bus_id) out.push_back(br.from);
  }
  return out;
}

namespace {

// Radiality check for one subsystem: |E| = |V|-1 and connected.  On a
// cycle, reports the closing edge and the path it shortcuts.
void check_tree(const std::string& name, const std::vector<int>& nodes,
                const std::vector<const Branch*>& edges) {
  if (nodes.empty()) return;
  std::unordered_map<int, std::vector<int>> adj;
  std::unordered_map<int, int> comp;
  for (int n : nodes) comp[n] = n;
  std::function<int(int)> find = [&](int a) {
    while (comp[a] != a) a = comp[a] = comp[comp[a]];
    return a;
  };
  for (const Branch* e : edges) {
    int ra = find(e->from), rb = find(e->to);
    if (ra == rb) {
      // walk the existing path from->to for the error message
      std::unordered_map<int, int> prev;
      std::queue<int> q;
      q.push(e->from);
      prev[e->from] = e->from;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
          if (!prev.count(v)) {
            prev[v] = u;
            q.push(v);
          }
      }
      std::string cycle = std::to_string(e->to);
      for (int u = e->to; prev.count(u) && prev[u] != u;) {
        u = prev[u];
        cycle += "-" + std::to_string(u);
      }
      fail("subsystem " + name + " is not radial: branch (" + std::to_string(e->from) + "," +
           std::to_string(e->to) + ") closes cycle " + cycle);
    }
    comp[ra] = rb;
    adj[e->from].push_back(e->to);
    adj[e->to].push_back(e->from);
  }
  if (edges.size() + 1 != nodes.size())
    fail("subsystem " + name + " is not connected: " + std::to_string(nodes.size()) +
         " buses but " + std::to_string(edges.size()) + " branches");
  int root = find(nodes.front());
  for (int n : nodes)
    if (find(n) != root) fail("subsystem " + name + " is not connected");
}

}  // namespace

void HybridNetwork::validate() const {
  if (buses.empty()) fail("network has no buses");
  if (base_kva <= 0) fail("base_kva must be positive");
  std::unordered_set<int> ids;
  for (const Bus& b : buses) {
    if (!ids.insert(b.id).second) fail("duplicate bus id " + std::to_string(b.id));
    if (!(b.v_min > 0 && b.v_min < b.v_max))
      fail("bus " + std::to_string(b.id) + ": voltage bounds must satisfy 0 < v_min < v_max");
    if (b.mu_impor < 0 || b.mu_impor > 1)
      fail("bus " + std::to_string(b.id) + ": mu_impor outside [0,1]");
    if (b.base_kv <= 0) fail("bus " + std::to_string(b.id) + ": base_kv must be positive");
    if (b.kind == BusKind::Dc && b.subsystem != "dc")
      fail("bus " + std::to_string(b.id) + ": DC buses must use subsystem tag 'dc'");
  }

  std::map<std::string, std::vector<int>> subsystems;
  for (const Bus& b : buses) subsystems[b.subsystem].push_back(b.id);

  for (const Branch& br : ac_branches) {
    const Bus& a = bus(br.from);
    const Bus& b = bus(br.to);
    if (a.kind != BusKind::Ac || b.kind != BusKind::Ac)
      fail("AC branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") must connect AC buses");
    if (a.subsystem != b.subsystem)
      fail("AC branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") crosses subsystems");
    if (br.r_ohm < 0 || br.x_ohm < 0 || br.i_max_a <= 0)
      fail("AC branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") has invalid impedance or ampacity");
  }
  for (const Branch& br : dc_branches) {
    if (!is_dc(br.from) || !is_dc(br.to))
      fail("DC branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") must connect DC buses");
    if (br.r_ohm < 0 || br.i_max_a <= 0)
      fail("DC branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") has invalid resistance or ampacity");
  }

  for (auto& [name, nodes] : subsystems) {
    std::vector<const Branch*> edges;
    const auto& list = (name == "dc") ? dc_branches : ac_branches;
    for (const Branch& br : list)
      if (bus(br.from).subsystem == name) edges.push_back(&br);
    check_tree(name, nodes, edges);
  }

  // Slack designations: one per AC subsystem; the DC balance node is the
  // Udc-Q converter's DC bus.
  for (auto& [name, nodes] : subsystems) {
    if (name == "dc") continue;
    int n_slack = 0;
    for (int id : nodes) n_slack += bus(id).slack ? 1 : 0;
    if (n_slack != 1)
      fail("subsystem " + name + " must declare exactly one slack bus (found " +
           std::to_string(n_slack) + ")");
  }

  int n_udcq = 0;
  for (const Vsc& v : vscs) {
    if (!has_bus(v.ac_bus) || !has_bus(v.dc_bus)) fail("VSC references unknown bus");
    if (is_dc(v.ac_bus) || !is_dc(v.dc_bus))
      fail("VSC must bridge one AC bus and one DC bus");
    if (v.s_kva <= 0 || v.p_max_kw <= 0) fail("VSC capacity must be positive");
    if (v.eta_loss < 0 || v.eta_loss >= 1) fail("VSC loss coefficient outside [0,1)");
    n_udcq += (v.mode == VscMode::UdcQ) ? 1 : 0;
  }
  if (dc_bus_count() > 0 && n_udcq != 1)
    fail("exactly one VSC must operate in Udc-Q mode to anchor the DC subsystem (found " +
         std::to_string(n_udcq) + ")");

  for (const Placement& p : placements) {
    if (!has_bus(p.node)) fail("placement on unknown node " + std::to_string(p.node));
    if (p.e_min_kwh < 0 || p.e_max_kwh < p.e_min_kwh || p.p_min_kw < 0 ||
        p.p_max_kw < p.p_min_kw)
      fail("placement on node " + std::to_string(p.node) + " has invalid sizing bounds");
    if (p.n_mess_max < 0 || p.n_cess < 1)
      fail("placement on node " + std::to_string(p.node) + " has invalid module counts");
  }
}

HybridNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open network file: " + path);

  HybridNetwork net;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (toks[0].front() == '[') {
      section = toks[0];
      continue;
    }
    if (section.empty()) {
      if (toks[0] == "base_kva" && toks.size() == 2) {
        net.base_kva = to_double(toks[1], where + " base_kva");
        continue;
      }
      fail(where + ": unexpected line before first section");
    }
    if (section == "[buses]") {
      if (toks.size() != 7) fail(where + ": [buses] rows need 7 fields "
                                 "(id subsystem base_kv v_min v_max slack mu_impor)");
      Bus b;
      b.id = to_int(toks[0], where + " bus id");
      b.subsystem = toks[1];
      b.kind = (b.subsystem == "dc") ? BusKind::Dc : BusKind::Ac;
      b.base_kv = to_double(toks[2], where + " base_kv");
      b.v_min = to_double(toks[3], where + " v_min");
      b.v_max = to_double(toks[4], where + " v_max");
      b.slack = to_int(toks[5], where + " slack") != 0;
      b.mu_impor = to_double(toks[6], where + " mu_impor");
      net.buses.push_back(b);
    } else if (section == "[branches]") {
      if (toks.size() != 5) fail(where + ": [branches] rows need 5 fields "
                                 "(from to r_ohm x_ohm i_max_a)");
      Branch br;
      br.from = to_int(toks[0], where + " from");
      br.to = to_int(toks[1], where + " to");
      br.r_ohm = to_double(toks[2], where + " r_ohm");
      br.x_ohm = to_double(toks[3], where + " x_ohm");
      br.i_max_a = to_double(toks[4], where + " i_max_a");
      // classified after all buses are read
      net.dc_branches.push_back(br);
    } else if (section == "[vscs]") {
      if (toks.size() != 7) fail(where + ": [vscs] rows need 7 fields "
                                 "(ac_bus dc_bus s_kva p_max_kw q_max_kvar mode eta_loss)");
      Vsc v;
      v.ac_bus = to_int(toks[0], where + " ac_bus");
      v.dc_bus = to_int(toks[1], where + " dc_bus");
      v.s_kva = to_double(toks[2], where + " s_kva");
      v.p_max_kw = to_double(toks[3], where + " p_max_kw");
      v.q_max_kvar = to_double(toks[4], where + " q_max_kvar");
      if (toks[5] == "udcq") v.mode = VscMode::UdcQ;
      else if (toks[5] == "pq") v.mode = VscMode::PQ;
      else fail(where + ": VSC mode must be 'udcq' or 'pq'");
      v.eta_loss = to_double(toks[6], where + " eta_loss");
      net.vscs.push_back(v);
    } else if (section == "[placements]") {
      if (toks.size() != 9) fail(where + ": [placements] rows need 9 fields "
                                 "(node kind e_min e_max p_min p_max n_mess_max n_cess colocated)");
      Placement p;
      p.node = to_int(toks[0], where + " node");
      if (toks[1] == "sess") p.kind = StorageKind::Sess;
      else if (toks[1] == "mess") p.kind = StorageKind::Mess;
      else fail(where + ": placement kind must be 'sess' or 'mess'");
      p.e_min_kwh = to_double(toks[2], where + " e_min");
      p.e_max_kwh = to_double(toks[3], where + " e_max");
      p.p_min_kw = to_double(toks[4], where + " p_min");
      p.p_max_kw = to_double(toks[5], where + " p_max");
      p.n_mess_max = to_int(toks[6], where + " n_mess_max");
      p.n_cess = to_int(toks[7], where + " n_cess");
      p.colocated = to_int(toks[8], where + " colocated") != 0;
      net.placements.push_back(p);
    } else {
      fail(where + ": unknown section " + section);
    }
  }

  // Split the mixed branch list into AC and DC once bus kinds are known.
  std::vector<Branch> all = std::move(net.dc_branches);
  net.dc_branches.clear();
  for (const Branch& br : all) {
    if (!net.has_bus(br.from) || !net.has_bus(br.to))
      fail("branch (" + std::to_string(br.from) + "," + std::to_string(br.to) +
           ") references unknown bus");
    if (net.is_dc(br.from) && net.is_dc(br.to))
      net.dc_branches.push_back(br);
    else
      net.ac_branches.push_back(br);
  }

  net.validate();
  return net;
}

void save_network(const HybridNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write network file: " + path);
  out.precision(12);
  out << "base_kva " << net.base_kva << "\n\n[buses]\n";
  for (const Bus& b : net.buses)
    out << b.id << ' ' << b.subsystem << ' ' << b.base_kv << ' ' << b.v_min << ' ' << b.v_max
        << ' ' << (b.slack ? 1 : 0) << ' ' << b.mu_impor << "\n";
  out << "\n[branches]\n";
  for (const Branch& br : net.ac_branches)
    out << br.from << ' ' << br.to << ' ' << br.r_ohm << ' ' << br.x_ohm << ' ' << br.i_max_a
        << "\n";
  for (const Branch& br : net.dc_branches)
    out << br.from << ' ' << br.to << ' ' << br.r_ohm << ' ' << br.x_ohm << ' ' << br.i_max_a
        << "\n";
  out << "\n[vscs]\n";
  for (const Vsc& v : net.vscs)
    out << v.ac_bus << ' ' << v.dc_bus << ' ' << v.s_kva << ' ' << v.p_max_kw << ' '
        << v.q_max_kvar << ' ' << (v.mode == VscMode::UdcQ ? "udcq" : "pq") << ' ' << v.eta_loss
        << "\n";
  out << "\n[placements]\n";
  for (const Placement& p : net.placements)
    out << p.node << ' ' << (p.kind == StorageKind::Sess ? "sess" : "mess") << ' ' << p.e_min_kwh
        << ' ' << p.e_max_kwh << ' ' << p.p_min_kw << ' ' << p.p_max_kw << ' ' << p.n_mess_max
        << ' ' << p.n_cess << ' ' << (p.colocated ? 1 : 0) << "\n";
}

double Tariff::price_at(int hour) const {
  if (hour < 0 || hour >= kHoursPerDay)
    fail("tariff lookup outside [0,24): hour " + std::to_string(hour));
  for (const Band& b : bands)
    if (hour >= b.start_hour && hour < b.end_hour) return b.price;
  fail("tariff bands do not cover hour " + std::to_string(hour));
}

void Tariff::validate() const {
  std::array<int, kHoursPerDay> cover{};
  for (const Band& b : bands) {
    if (b.start_hour < 0 || b.end_hour > kHoursPerDay || b.start_hour >= b.end_hour)
      fail("tariff band [" + std::to_string(b.start_hour) + "," + std::to_string(b.end_hour) +
           ") is malformed");
    if (b.price <= 0) fail("tariff prices must be positive");
    for (int h = b.start_hour; h < b.end_hour; ++h) cover[h]++;
  }
  for (int h = 0; h < kHoursPerDay; ++h)
    if (cover[h] != 1)
      fail("tariff bands must partition [0,24): hour " + std::to_string(h) + " covered " +
           std::to_string(cover[h]) + " times");
}

Tariff load_tariff(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open tariff file: " + path);
  Tariff t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 3)
      fail(path + ":" + std::to_string(lineno) + ": expected start_hour,end_hour,price");
    Tariff::Band b;
    b.start_hour = to_int(toks[0], "start_hour");
    b.end_hour = to_int(toks[1], "end_hour");
    b.price = to_double(toks[2], "price");
    t.bands.push_back(b);
  }
  t.validate();
  return t;
}

Tariff default_tariff() {
  Tariff t;
  t.bands = {{0, 7, 0.044}, {7, 17, 0.116}, {17, 23, 0.196}, {23, 24, 0.044}};
  return t;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open scenario file: " + path);
  Scenario s;
  std::string line;
  std::vector<std::string> header;
  int row = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (!line.empty() && line[0] == '#') {
      auto toks = tokenize(line.substr(1));
      if (toks.size() == 2 && toks[0] == "id") s.id = toks[1];
      if (toks.size() == 2 && toks[0] == "days") s.days = to_int(toks[1], where + " days");
      if (toks.size() == 2 && toks[0] == "stage")
        s.stage = (toks[1] == "stage2") ? StageTag::Stage2 : StageTag::Stage1;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (header.empty()) {
      header = toks;
      if (header.front() != "hour") fail(where + ": first column must be 'hour'");
      continue;
    }
    if (toks.size() != header.size())
      fail(where + ": row has " + std::to_string(toks.size()) + " fields, header has " +
           std::to_string(header.size()));
    if (row >= kHoursPerDay) fail(where + ": scenario must have exactly 24 hourly rows");
    int hour = to_int(toks[0], where + " hour");
    if (hour != row) fail(where + ": hours must run 0..23 in order");
    for (size_t c = 1; c < header.size(); ++c) {
      const std::string& name = header[c];
      double v = to_double(toks[c], where + " " + name);
      if (name == "price") s.price[row] = v;
      else if (name == "temp_c") s.temp_k[row] = v + 273.15;
      else if (name == "wind_ms") s.wind_ms[row] = v;
      else if (name.rfind("load_p_", 0) == 0)
        s.load_p_kw[to_int(name.substr(7), name)][row] = v;
      else if (name.rfind("load_q_", 0) == 0)
        s.load_q_kvar[to_int(name.substr(7), name)][row] = v;
      else if (name.rfind("pv_", 0) == 0)
        s.pv_kw[to_int(name.substr(3), name)][row] = v;
      else
        fail(where + ": unknown column '" + name + "'");
    }
    ++row;
  }
  if (row != kHoursPerDay)
    fail(path + ": scenario has " + std::to_string(row) + " rows, expected 24");
  if (s.id.empty()) s.id = path;
  if (s.days < 1) fail(path + ": days must be >= 1");
  return s;
}

const Scenario& validate_scenario(const Scenario& s, const HybridNetwork& n) {
  auto check_nodes = [&](const auto& m, const char* what, bool allow_negative) {
    for (const auto& [node, series] : m) {
      if (!n.has_bus(node))
        fail("scenario " + s.id + ": " + what + " references unknown node " +
             std::to_string(node));
      for (double v : series)
        if (!allow_negative && v < 0)
          fail("scenario " + s.id + ": negative " + std::string(what) + " at node " +
               std::to_string(node));
    }
  };
  check_nodes(s.load_p_kw, "load_p", false);
  check_nodes(s.load_q_kvar, "load_q", true);
  check_nodes(s.pv_kw, "pv", false);
  for (const auto& [node, series] : s.load_q_kvar) {
    (void)series;
    if (n.is_dc(node))
      fail("scenario " + s.id + ": reactive load on DC node " + std::to_string(node));
  }
  for (double p : s.price)
    if (p <= 0) fail("scenario " + s.id + ": prices must be positive");
  for (double t : s.temp_k)
    if (t < 223.0 || t > 333.0)
      fail("scenario " + s.id + ": ambient temperature outside [223,333] K sanity band");
  if (s.days < 1) fail("scenario " + s.id + ": days must be >= 1");
  return s;
}

}  // namespace gridstor
