#pragma once

// Exogenous time series driving the environment: per-load (p, q) demand and
// per-PV active generation, one row per step (default 3 minutes). Covers a
// CSV loader validated against the network's declared columns and a synthetic
// generator with a diurnal PV bell and a two-peak load curve.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "avc/common.hpp"
#include "avc/grid_model.hpp"
#include "avc/power_flow.hpp"

namespace avc {

struct TimeSeriesDataset {
    int step_minutes = 3;
    // Column order follows NetworkModel::loads / NetworkModel::pvs.
    Eigen::MatrixXd load_p;  // rows x n_loads
    Eigen::MatrixXd load_q;  // rows x n_loads
    Eigen::MatrixXd pv_p;    // rows x n_pvs

    int rows() const { return static_cast<int>(load_p.rows()); }
    int rows_per_day() const { return 1440 / step_minutes; }
    int day_of(int row) const { return row / rows_per_day(); }
    int step_of_day(int row) const { return row % rows_per_day(); }
    double hour_of(int row) const {
        return static_cast<double>(step_of_day(row)) * step_minutes / 60.0;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline void validate_dataset(const TimeSeriesDataset& ds) {
    if (!ds.load_p.allFinite() || !ds.load_q.allFinite() || !ds.pv_p.allFinite())
        throw NonFiniteValue("dataset contains non-finite values");
    if ((ds.load_p.array() < 0.0).any())
        throw NonFiniteValue("dataset contains negative load active power");
    if ((ds.pv_p.array() < 0.0).any())
        throw NonFiniteValue("dataset contains negative pv active power");
    // Must cover at least one evaluation episode (480 steps needs 481 rows).
    if (ds.rows() < 481)
        throw DatasetTooShort("dataset has " + std::to_string(ds.rows()) +
                              " rows; need at least 481");
}

}  // namespace detail

inline TimeSeriesDataset load_dataset(const std::string& path, const NetworkModel& network,
                                      int step_minutes = 3) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);

    std::string header;
    if (!std::getline(in, header)) throw ParseError("dataset is empty: " + path);
    const auto cols = detail::split_csv_line(header);
    if (cols.empty() || cols[0] != "timestamp")
        throw ParseError("dataset header must start with 'timestamp'");

    std::map<std::string, int> index;
    for (std::size_t i = 1; i < cols.size(); ++i) {
        if (!index.emplace(cols[i], static_cast<int>(i)).second)
            throw ParseError("duplicate dataset column: " + cols[i]);
    }

    // Every declared network column must be present; anything else is a typo.
    std::vector<int> lp_idx, lq_idx, pv_idx;
    std::size_t expected = 1;
    for (const auto& l : network.loads) {
        for (const std::string suffix : {"_p", "_q"}) {
            auto it = index.find(l.column + suffix);
            if (it == index.end()) throw MissingColumn("dataset missing column " + l.column + suffix);
            (suffix == std::string("_p") ? lp_idx : lq_idx).push_back(it->second);
            ++expected;
        }
    }
    for (const auto& p : network.pvs) {
        auto it = index.find(p.column + "_p");
        if (it == index.end()) throw MissingColumn("dataset missing column " + p.column + "_p");
        pv_idx.push_back(it->second);
        ++expected;
    }
    if (cols.size() != expected)
        throw ParseError("dataset has columns not declared by the network file");

    std::vector<std::vector<double>> raw;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != cols.size())
            throw ParseError("dataset line " + std::to_string(lineno) + ": wrong field count");
        std::vector<double> row(fields.size());
        for (std::size_t i = 1; i < fields.size(); ++i) row[i] = parse_double(fields[i]);
        raw.push_back(std::move(row));
    }

    TimeSeriesDataset ds;
    ds.step_minutes = step_minutes;
    const int n = static_cast<int>(raw.size());
    ds.load_p.resize(n, static_cast<int>(network.loads.size()));
    ds.load_q.resize(n, static_cast<int>(network.loads.size()));
    ds.pv_p.resize(n, static_cast<int>(network.pvs.size()));
    for (int r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < lp_idx.size(); ++c) {
            ds.load_p(r, static_cast<int>(c)) = raw[static_cast<std::size_t>(r)][static_cast<std::size_t>(lp_idx[c])];
            ds.load_q(r, static_cast<int>(c)) = raw[static_cast<std::size_t>(r)][static_cast<std::size_t>(lq_idx[c])];
        }
        for (std::size_t c = 0; c < pv_idx.size(); ++c)
            ds.pv_p(r, static_cast<int>(c)) = raw[static_cast<std::size_t>(r)][static_cast<std::size_t>(pv_idx[c])];
    }
    detail::validate_dataset(ds);
    return ds;
}

inline void save_dataset(const TimeSeriesDataset& ds, const NetworkModel& network,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset: " + path);
    out << "timestamp";
    for (const auto& l : network.loads) out << "," << l.column << "_p," << l.column << "_q";
    for (const auto& p : network.pvs) out << "," << p.column << "_p";
    out << "\n";
    for (int r = 0; r < ds.rows(); ++r) {
        out << r * ds.step_minutes;
        for (int c = 0; c < ds.load_p.cols(); ++c)
            out << "," << fmt_double(ds.load_p(r, c)) << "," << fmt_double(ds.load_q(r, c));
        for (int c = 0; c < ds.pv_p.cols(); ++c) out << "," << fmt_double(ds.pv_p(r, c));
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Synthetic data. PV follows a squared-sine bell between sunrise and sunset
// with a per-day weather factor; load follows a two-peak curve. When PV is
// present the generator verifies (by solving the power flow) that the
// uncontrolled network violates the upper voltage bound at some midday step,
// scaling PV up if necessary, so the constraint is never vacuous.
// ---------------------------------------------------------------------------

struct SynthConfig {
    int days = 20;
    int step_minutes = 3;
    double pv_peak = 0.8;        // p.u. nameplate active peak per PV
    double load_peak = 0.12;     // p.u. peak active demand per load
    double noise = 0.03;         // multiplicative noise sigma
    double power_factor = 0.95;  // load power factor (lagging)
    double sunrise_hour = 6.0;
    double sunset_hour = 18.0;
};

namespace detail {

inline double pv_bell(double hour, double sunrise, double sunset) {
    if (hour <= sunrise || hour >= sunset) return 0.0;
    const double s = std::sin(3.14159265358979323846 * (hour - sunrise) / (sunset - sunrise));
    return s * s;
}

inline double load_shape(double hour) {
    auto bump = [](double h, double center, double width) {
        const double d = (h - center) / width;
        return std::exp(-0.5 * d * d);
    };
    return 0.35 + 0.55 * bump(hour, 8.0, 2.5) + 0.75 * bump(hour, 19.0, 2.5);
}

// True if some row with substantial PV output pushes a bus above 1.05 p.u.
// when all inverters idle (q = 0).
inline bool uncontrolled_overvoltage(const NetworkModel& network, const TimeSeriesDataset& ds) {
    const double pv_hi = 0.7 * ds.pv_p.rowwise().sum().maxCoeff();
    SolverOptions opts;
    for (int r = 0; r < ds.rows(); ++r) {
        if (ds.pv_p.row(r).sum() < pv_hi) continue;
        InjectionProfile inj = InjectionProfile::zeros(network.n_buses);
        for (std::size_t k = 0; k < network.loads.size(); ++k) {
            inj.p(network.loads[k].bus) -= ds.load_p(r, static_cast<int>(k));
            inj.q(network.loads[k].bus) -= ds.load_q(r, static_cast<int>(k));
        }
        for (std::size_t k = 0; k < network.pvs.size(); ++k)
            inj.p(network.pvs[k].bus) += ds.pv_p(r, static_cast<int>(k));
        try {
            const PowerFlowSolution sol = solve(network, inj, opts);
            for (BusId i = 1; i < network.n_buses; ++i)
                if (sol.v(i) > 1.05) return true;
        } catch (const AvcError&) {
            continue;  // infeasible rows do not count as violations
        }
    }
    return false;
}

}  // namespace detail

inline TimeSeriesDataset synth_dataset(const NetworkModel& network, const SynthConfig& cfg,
                                       std::uint64_t seed) {
    if (cfg.days < 1) throw ConfigError("synth dataset needs at least one day");
    if (1440 % cfg.step_minutes != 0) throw ConfigError("step_minutes must divide 1440");

    Rng rng(seed);
    const int rpd = 1440 / cfg.step_minutes;
    const int rows = cfg.days * rpd + 1;  // one spare row so the last day's episode can step
    const int n_loads = static_cast<int>(network.loads.size());
    const int n_pvs = static_cast<int>(network.pvs.size());

    TimeSeriesDataset ds;
    ds.step_minutes = cfg.step_minutes;
    ds.load_p.resize(rows, n_loads);
    ds.load_q.resize(rows, n_loads);
    ds.pv_p.resize(rows, n_pvs);

    std::vector<double> load_scale(static_cast<std::size_t>(n_loads));
    for (auto& s : load_scale) s = rng.uniform(0.8, 1.2);
    std::vector<double> pv_scale(static_cast<std::size_t>(n_pvs));
    for (auto& s : pv_scale) s = rng.uniform(0.9, 1.1);

    const double tan_phi = std::tan(std::acos(cfg.power_factor));
    const int max_days = cfg.days + 1;  // spare row falls into a virtual extra day

    std::vector<double> weather(static_cast<std::size_t>(max_days));
    for (auto& w : weather) w = std::clamp(1.0 + 0.15 * rng.normal(), 0.6, 1.2);

    for (int r = 0; r < rows; ++r) {
        const int day = r / rpd;
        const double hour = static_cast<double>(r % rpd) * cfg.step_minutes / 60.0;
        const double shape = detail::load_shape(hour);
        for (int c = 0; c < n_loads; ++c) {
            double p = cfg.load_peak * load_scale[static_cast<std::size_t>(c)] * shape *
                       (1.0 + cfg.noise * rng.normal());
            p = std::max(p, 0.0);
            ds.load_p(r, c) = p;
            ds.load_q(r, c) = p * tan_phi;
        }
        const double bell = detail::pv_bell(hour, cfg.sunrise_hour, cfg.sunset_hour);
        for (int c = 0; c < n_pvs; ++c) {
            double p = cfg.pv_peak * pv_scale[static_cast<std::size_t>(c)] *
                       weather[static_cast<std::size_t>(day)] * bell *
                       (1.0 + cfg.noise * rng.normal());
            ds.pv_p(r, c) = std::max(p, 0.0);
        }
    }

    if (cfg.pv_peak > 0.0 && n_pvs > 0) {
        int attempts = 0;
        while (!detail::uncontrolled_overvoltage(network, ds)) {
            if (++attempts > 8)
                throw ConfigError("synthetic dataset cannot reach overvoltage on this network; "
                                  "raise pv_peak or lower branch impedances");
            ds.pv_p *= 1.3;
        }
    }

    detail::validate_dataset(ds);
    return ds;
}

// Inverter capacity: ratings declared in the network file win; unset ratings
// (0) default to 1.2x the PV's peak active power in the attached dataset.
inline std::vector<double> resolve_s_ratings(const NetworkModel& network,
                                             const TimeSeriesDataset& ds) {
    std::vector<double> out(network.pvs.size());
    for (std::size_t k = 0; k < network.pvs.size(); ++k) {
        if (network.pvs[k].s_rating > 0.0) {
            out[k] = network.pvs[k].s_rating;
        } else {
            const double peak = ds.pv_p.col(static_cast<int>(k)).maxCoeff();
            if (!(peak > 0.0))
                throw ConfigError("pv '" + network.pvs[k].column +
                                  "' has no rating and zero dataset peak");
            out[k] = 1.2 * peak;
        }
    }
    return out;
}

}  // namespace avc
