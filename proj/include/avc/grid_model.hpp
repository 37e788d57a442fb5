#pragma once

// Static model of a radial distribution network: tree topology rooted at the
// slack bus, per-unit branch impedances with derived series admittances,
// load/PV placement and the zone map that defines agent observation regions.

#include <algorithm>
#include <complex>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "avc/common.hpp"
#include "avc/toml.hpp"

namespace avc {

using BusId = int;
using Complex = std::complex<double>;

struct Branch {
    BusId from = 0;
    BusId to = 0;
    double r = 0.0;  // p.u. resistance
    double x = 0.0;  // p.u. reactance
    Complex y;       // series admittance 1/(r + ix)

    // Paper convention y = g - i*b, so b = -Im(y) (positive for inductive lines).
    double g() const { return y.real(); }
    double b() const { return -y.imag(); }
};

struct LoadSpec {
    BusId bus = 0;
    std::string column;  // dataset column prefix; data columns are <column>_p, <column>_q
};

struct PvSpec {
    BusId bus = 0;
    std::string column;      // dataset column prefix; data column is <column>_p
    double s_rating = 0.0;   // inverter apparent-power capacity, p.u.; 0 means
                             // "derive as 1.2x the dataset peak" at env setup
};

// Raw file content before validation.
struct NetworkSpec {
    std::string name = "net";
    int n_buses = 0;
    std::vector<Branch> branches;  // y not yet derived
    std::vector<LoadSpec> loads;
    std::vector<PvSpec> pvs;
    std::map<BusId, int> zones;    // non-slack bus -> zone id
    BusId slack_bus = 0;
    double v0 = 1.0;
    double base_mva = 1.0;
    double base_kv = 1.0;
};

class NetworkModel {
  public:
    std::string name;
    int n_buses = 0;
    std::vector<Branch> branches;   // exactly n_buses-1, tree over 0..n_buses-1
    std::vector<LoadSpec> loads;    // sorted by bus
    std::vector<PvSpec> pvs;        // sorted by bus; one agent per PV
    std::map<BusId, int> zones;     // every non-slack bus, never bus 0
    double v0 = 1.0;
    double base_mva = 1.0;
    double base_kv = 1.0;

    int n_agents() const { return static_cast<int>(pvs.size()); }

    bool valid_bus(BusId i) const { return i >= 0 && i < n_buses; }

    void check_bus(BusId i) const {
        if (!valid_bus(i)) throw UnknownBus("unknown bus " + std::to_string(i));
    }

    const std::vector<BusId>& adjacency(BusId i) const {
        check_bus(i);
        return adj_[static_cast<std::size_t>(i)];
    }

    // Distinct zone ids in ascending order.
    std::vector<int> zone_ids() const {
        std::set<int> ids;
        for (const auto& [bus, z] : zones) ids.insert(z);
        return {ids.begin(), ids.end()};
    }

    // Non-slack buses belonging to zone z, ascending.
    std::vector<BusId> zone_buses(int z) const {
        std::vector<BusId> out;
        for (const auto& [bus, zz] : zones)
            if (zz == z) out.push_back(bus);
        return out;
    }

    friend NetworkModel build_network(const NetworkSpec& spec);

  private:
    std::vector<std::vector<BusId>> adj_;
};

inline std::set<BusId> neighbors(const NetworkModel& network, BusId i) {
    const auto& a = network.adjacency(i);
    return {a.begin(), a.end()};
}

inline NetworkModel build_network(const NetworkSpec& spec) {
    if (spec.n_buses < 1) throw ConfigError("network needs at least one bus");
    if (spec.slack_bus != 0) throw ConfigError("slack bus must be bus 0");
    if (!(spec.v0 > 0.0)) throw ConfigError("slack voltage must be positive");

    const int n = spec.n_buses;

    std::set<std::pair<BusId, BusId>> seen;
    for (const auto& br : spec.branches) {
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n)
            throw UnknownBus("branch endpoint out of range: (" + std::to_string(br.from) +
                             "," + std::to_string(br.to) + ")");
        if (br.r < 0.0 || br.x < 0.0)
            throw ConfigError("branch impedance must be nonnegative");
        if (br.r == 0.0 && br.x == 0.0)
            throw ZeroImpedanceError("branch (" + std::to_string(br.from) + "," +
                                     std::to_string(br.to) + ") has r=x=0");
        if (br.from == br.to)
            throw CycleError("self-loop at bus " + std::to_string(br.from));
        auto key = std::minmax(br.from, br.to);
        if (!seen.insert(key).second)
            throw CycleError("duplicate branch (" + std::to_string(key.first) + "," +
                             std::to_string(key.second) + ")");
    }

    // Reachability from the slack over the branch adjacency.
    std::vector<std::vector<BusId>> adj(static_cast<std::size_t>(n));
    for (const auto& br : spec.branches) {
        adj[static_cast<std::size_t>(br.from)].push_back(br.to);
        adj[static_cast<std::size_t>(br.to)].push_back(br.from);
    }
    std::vector<char> vis(static_cast<std::size_t>(n), 0);
    std::vector<BusId> stack{0};
    vis[0] = 1;
    while (!stack.empty()) {
        BusId u = stack.back();
        stack.pop_back();
        for (BusId v : adj[static_cast<std::size_t>(u)])
            if (!vis[static_cast<std::size_t>(v)]) {
                vis[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
    }
    for (BusId i = 0; i < n; ++i)
        if (!vis[static_cast<std::size_t>(i)])
            throw DisconnectedError("bus " + std::to_string(i) + " unreachable from slack");
    if (static_cast<int>(spec.branches.size()) != n - 1)
        throw CycleError("branch set is not a tree: |E|=" +
                         std::to_string(spec.branches.size()) + ", |V|-1=" +
                         std::to_string(n - 1));

    // Zones cover exactly the non-slack buses.
    for (const auto& [bus, z] : spec.zones) {
        if (bus == 0) throw ZoneError("slack bus must not belong to a zone");
        if (bus < 0 || bus >= n) throw UnknownBus("zone entry for unknown bus " + std::to_string(bus));
        (void)z;
    }
    for (BusId i = 1; i < n; ++i)
        if (!spec.zones.count(i))
            throw ZoneError("bus " + std::to_string(i) + " has no zone");

    std::set<BusId> load_buses, pv_buses;
    std::set<std::string> columns;
    for (const auto& l : spec.loads) {
        if (l.bus < 0 || l.bus >= n) throw UnknownBus("load at unknown bus " + std::to_string(l.bus));
        if (!load_buses.insert(l.bus).second)
            throw ConfigError("duplicate load at bus " + std::to_string(l.bus));
        if (l.column.empty() || !columns.insert(l.column).second)
            throw ConfigError("load column name missing or duplicated at bus " + std::to_string(l.bus));
    }
    for (const auto& p : spec.pvs) {
        if (p.bus < 0 || p.bus >= n) throw UnknownBus("pv at unknown bus " + std::to_string(p.bus));
        if (!pv_buses.insert(p.bus).second)
            throw ConfigError("duplicate pv at bus " + std::to_string(p.bus));
        if (p.column.empty() || !columns.insert(p.column).second)
            throw ConfigError("pv column name missing or duplicated at bus " + std::to_string(p.bus));
        if (p.s_rating < 0.0)
            throw ConfigError("pv s_rating must be nonnegative at bus " + std::to_string(p.bus));
    }

    NetworkModel m;
    m.name = spec.name;
    m.n_buses = n;
    m.branches = spec.branches;
    for (auto& br : m.branches) br.y = 1.0 / Complex(br.r, br.x);
    m.loads = spec.loads;
    std::sort(m.loads.begin(), m.loads.end(),
              [](const LoadSpec& a, const LoadSpec& b) { return a.bus < b.bus; });
    m.pvs = spec.pvs;
    std::sort(m.pvs.begin(), m.pvs.end(),
              [](const PvSpec& a, const PvSpec& b) { return a.bus < b.bus; });
    m.zones = spec.zones;
    m.v0 = spec.v0;
    m.base_mva = spec.base_mva;
    m.base_kv = spec.base_kv;
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    m.adj_ = std::move(adj);
    return m;
}

// ---------------------------------------------------------------------------
// Network file I/O. Sections: [network], [bases], [slack], [[branch]],
// [[load]], [[pv]], [[zone]]. Unknown fields are rejected.
// ---------------------------------------------------------------------------

inline NetworkSpec parse_network_spec(const toml::Table& doc) {
    doc.expect_only({}, "network file top level");
    doc.expect_only_tables({"network", "bases", "slack", "branch", "load", "pv", "zone"},
                           "network file");

    NetworkSpec spec;
    const toml::Table& net = doc.require_table("network");
    net.expect_only({"name", "buses"}, "[network]");
    spec.name = net.get_string_or("name", "net");
    spec.n_buses = static_cast<int>(net.get_int("buses"));

    if (const toml::Table* bases = doc.table("bases")) {
        bases->expect_only({"base_mva", "base_kv"}, "[bases]");
        spec.base_mva = bases->get_float_or("base_mva", 1.0);
        spec.base_kv = bases->get_float_or("base_kv", 1.0);
    }

    const toml::Table& slack = doc.require_table("slack");
    slack.expect_only({"bus", "v0_pu"}, "[slack]");
    spec.slack_bus = static_cast<BusId>(slack.get_int("bus"));
    spec.v0 = slack.get_float_or("v0_pu", 1.0);

    for (const auto& t : doc.array_of("branch")) {
        t.expect_only({"from", "to", "r_pu", "x_pu"}, "[[branch]]");
        Branch br;
        br.from = static_cast<BusId>(t.get_int("from"));
        br.to = static_cast<BusId>(t.get_int("to"));
        br.r = t.get_float("r_pu");
        br.x = t.get_float("x_pu");
        spec.branches.push_back(br);
    }
    for (const auto& t : doc.array_of("load")) {
        t.expect_only({"bus", "column"}, "[[load]]");
        spec.loads.push_back({static_cast<BusId>(t.get_int("bus")), t.get_string("column")});
    }
    for (const auto& t : doc.array_of("pv")) {
        t.expect_only({"bus", "column", "s_rating_pu"}, "[[pv]]");
        spec.pvs.push_back({static_cast<BusId>(t.get_int("bus")), t.get_string("column"),
                            t.get_float_or("s_rating_pu", 0.0)});
    }
    for (const auto& t : doc.array_of("zone")) {
        t.expect_only({"bus", "zone"}, "[[zone]]");
        BusId bus = static_cast<BusId>(t.get_int("bus"));
        if (spec.zones.count(bus)) throw ZoneError("bus " + std::to_string(bus) + " zoned twice");
        spec.zones[bus] = static_cast<int>(t.get_int("zone"));
    }
    return spec;
}

inline NetworkModel load_network(const std::string& path) {
    return build_network(parse_network_spec(toml::parse_file(path)));
}

inline std::string network_to_string(const NetworkModel& m) {
    std::string out;
    out += "[network]\nname = \"" + m.name + "\"\nbuses = " + std::to_string(m.n_buses) + "\n\n";
    out += "[bases]\nbase_mva = " + fmt_double(m.base_mva) +
           "\nbase_kv = " + fmt_double(m.base_kv) + "\n\n";
    out += "[slack]\nbus = 0\nv0_pu = " + fmt_double(m.v0) + "\n";
    for (const auto& br : m.branches)
        out += "\n[[branch]]\nfrom = " + std::to_string(br.from) + "\nto = " +
               std::to_string(br.to) + "\nr_pu = " + fmt_double(br.r) + "\nx_pu = " +
               fmt_double(br.x) + "\n";
    for (const auto& l : m.loads)
        out += "\n[[load]]\nbus = " + std::to_string(l.bus) + "\ncolumn = \"" + l.column + "\"\n";
    for (const auto& p : m.pvs)
        out += "\n[[pv]]\nbus = " + std::to_string(p.bus) + "\ncolumn = \"" + p.column +
               "\"\ns_rating_pu = " + fmt_double(p.s_rating) + "\n";
    for (const auto& [bus, z] : m.zones)
        out += "\n[[zone]]\nbus = " + std::to_string(bus) + "\nzone = " + std::to_string(z) + "\n";
    return out;
}

inline void save_network(const NetworkModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write network file: " + path);
    out << network_to_string(m);
}

}  // namespace avc
