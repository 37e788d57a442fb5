#pragma once

// AC power flow on a radial network, Newton-Raphson in polar form with the
// slack bus removed from the unknown vector. Dense Jacobian with a direct
// solve; plenty at desk scale.
//
// Physics: branch series admittance y = 1/(r + ix), Ohm's law
// I_ij = y_ij (V_i - V_j), current balance I_i = sum_j I_ij and power balance
// s_i = V_i * conj(I_i). In bus-admittance form (Y = G + iB) the injections
// are the usual
//   P_i = v_i sum_j v_j (G_ij cos th_ij + B_ij sin th_ij)
//   Q_i = v_i sum_j v_j (G_ij sin th_ij - B_ij cos th_ij).

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "avc/common.hpp"
#include "avc/grid_model.hpp"

namespace avc {

struct InjectionProfile {
    // Net injection per bus (generation minus load), p.u. Entry 0 is the
    // slack bus and is ignored: its injection balances the network.
    Eigen::VectorXd p;
    Eigen::VectorXd q;

    static InjectionProfile zeros(int n_buses) {
        InjectionProfile inj;
        inj.p = Eigen::VectorXd::Zero(n_buses);
        inj.q = Eigen::VectorXd::Zero(n_buses);
        return inj;
    }
};

struct SolverOptions {
    double tolerance = 1e-8;  // max abs P/Q mismatch, p.u.
    int max_iter = 50;
    double v_floor = 0.3;     // p.u.; dipping below signals voltage collapse
    // Warm start (previous step's solution); flat start when absent.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> warm_start;
};

struct PowerFlowSolution {
    Eigen::VectorXd v;              // magnitude per bus, p.u.
    Eigen::VectorXd theta;          // phase per bus, radians in [-pi, pi]
    std::vector<Complex> i_branch;  // complex current per branch, network order
    double p_loss = 0.0;            // sum r |I|^2
    int iterations = 0;
    double residual_norm = 0.0;
};

struct BusAdmittance {
    Eigen::MatrixXd G;
    Eigen::MatrixXd B;
};

inline BusAdmittance build_ybus(const NetworkModel& network) {
    const int n = network.n_buses;
    BusAdmittance yb{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (const auto& br : network.branches) {
        const double g = br.y.real();
        const double b = br.y.imag();
        yb.G(br.from, br.from) += g;
        yb.B(br.from, br.from) += b;
        yb.G(br.to, br.to) += g;
        yb.B(br.to, br.to) += b;
        yb.G(br.from, br.to) -= g;
        yb.B(br.from, br.to) -= b;
        yb.G(br.to, br.from) -= g;
        yb.B(br.to, br.from) -= b;
    }
    return yb;
}

// Injections implied by a voltage profile, all buses (slack included).
inline void implied_injections(const BusAdmittance& yb, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& theta, Eigen::VectorXd& p_out,
                               Eigen::VectorXd& q_out) {
    const int n = static_cast<int>(v.size());
    p_out.setZero(n);
    q_out.setZero(n);
    for (int i = 0; i < n; ++i) {
        double pi = 0.0, qi = 0.0;
        for (int j = 0; j < n; ++j) {
            const double gij = yb.G(i, j);
            const double bij = yb.B(i, j);
            if (gij == 0.0 && bij == 0.0) continue;
            const double tij = theta(i) - theta(j);
            const double c = std::cos(tij);
            const double s = std::sin(tij);
            pi += v(j) * (gij * c + bij * s);
            qi += v(j) * (gij * s - bij * c);
        }
        p_out(i) = v(i) * pi;
        q_out(i) = v(i) * qi;
    }
}

// Per-bus mismatch (specified minus implied) for all non-slack buses.
inline std::map<BusId, std::pair<double, double>> residuals(const NetworkModel& network,
                                                            const InjectionProfile& inj,
                                                            const Eigen::VectorXd& v,
                                                            const Eigen::VectorXd& theta) {
    const int n = network.n_buses;
    if (static_cast<int>(v.size()) != n || static_cast<int>(theta.size()) != n)
        throw UnknownBus("voltage profile does not cover all buses");
    if (static_cast<int>(inj.p.size()) != n || static_cast<int>(inj.q.size()) != n)
        throw UnknownBus("injection profile does not cover all buses");
    const BusAdmittance yb = build_ybus(network);
    Eigen::VectorXd pc, qc;
    implied_injections(yb, v, theta, pc, qc);
    std::map<BusId, std::pair<double, double>> out;
    for (BusId i = 1; i < n; ++i) out[i] = {inj.p(i) - pc(i), inj.q(i) - qc(i)};
    return out;
}

namespace detail {

inline double wrap_angle(double a) {
    constexpr double pi = 3.14159265358979323846;
    while (a > pi) a -= 2.0 * pi;
    while (a < -pi) a += 2.0 * pi;
    return a;
}

}  // namespace detail

inline PowerFlowSolution solve(const NetworkModel& network, const InjectionProfile& inj,
                               const SolverOptions& opts = {}) {
    const int n = network.n_buses;
    if (static_cast<int>(inj.p.size()) != n || static_cast<int>(inj.q.size()) != n)
        throw UnknownBus("injection profile does not cover all buses");
    if (!inj.p.allFinite() || !inj.q.allFinite())
        throw NonFiniteValue("injection profile contains non-finite values");

    const BusAdmittance yb = build_ybus(network);
    const int m = n - 1;  // unknown buses 1..n-1

    Eigen::VectorXd v(n), theta(n);
    if (opts.warm_start) {
        v = opts.warm_start->first;
        theta = opts.warm_start->second;
        if (static_cast<int>(v.size()) != n || static_cast<int>(theta.size()) != n)
            throw ShapeMismatch("warm start profile has wrong size");
        v(0) = network.v0;
        theta(0) = 0.0;
    } else {
        v.setConstant(network.v0);
        theta.setZero();
    }

    Eigen::VectorXd pc(n), qc(n);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(opts.max_iter) + 1);

    int iterations = 0;
    double residual_norm = 0.0;
    for (int iter = 0;; ++iter) {
        implied_injections(yb, v, theta, pc, qc);
        residual_norm = 0.0;
        for (BusId i = 1; i < n; ++i) {
            residual_norm = std::max(residual_norm, std::abs(inj.p(i) - pc(i)));
            residual_norm = std::max(residual_norm, std::abs(inj.q(i) - qc(i)));
        }
        trace.push_back(residual_norm);
        iterations = iter;
        if (residual_norm <= opts.tolerance) break;
        if (iter >= opts.max_iter)
            throw NonConvergence("power flow did not converge: residual " +
                                     fmt_double(residual_norm) + " after " +
                                     std::to_string(iter) + " iterations",
                                 trace);

        // Jacobian blocks: rows [dP; dQ] over non-slack buses, columns
        // [theta; v] over the same buses.
        Eigen::MatrixXd jac(2 * m, 2 * m);
        Eigen::VectorXd mism(2 * m);
        for (BusId i = 1; i < n; ++i) {
            const int ri = i - 1;
            mism(ri) = inj.p(i) - pc(i);
            mism(m + ri) = inj.q(i) - qc(i);
            for (BusId j = 1; j < n; ++j) {
                const int cj = j - 1;
                if (i == j) {
                    jac(ri, cj) = -qc(i) - yb.B(i, i) * v(i) * v(i);
                    jac(ri, m + cj) = pc(i) / v(i) + yb.G(i, i) * v(i);
                    jac(m + ri, cj) = pc(i) - yb.G(i, i) * v(i) * v(i);
                    jac(m + ri, m + cj) = qc(i) / v(i) - yb.B(i, i) * v(i);
                } else {
                    const double gij = yb.G(i, j);
                    const double bij = yb.B(i, j);
                    if (gij == 0.0 && bij == 0.0) {
                        jac(ri, cj) = jac(ri, m + cj) = 0.0;
                        jac(m + ri, cj) = jac(m + ri, m + cj) = 0.0;
                        continue;
                    }
                    const double tij = theta(i) - theta(j);
                    const double c = std::cos(tij);
                    const double s = std::sin(tij);
                    jac(ri, cj) = v(i) * v(j) * (gij * s - bij * c);
                    jac(ri, m + cj) = v(i) * (gij * c + bij * s);
                    jac(m + ri, cj) = -v(i) * v(j) * (gij * c + bij * s);
                    jac(m + ri, m + cj) = v(i) * (gij * s - bij * c);
                }
            }
        }

        Eigen::VectorXd dx = jac.partialPivLu().solve(mism);
        if (!dx.allFinite())
            throw NonConvergence("power flow Jacobian solve produced non-finite step", trace);
        for (BusId i = 1; i < n; ++i) {
            theta(i) += dx(i - 1);
            v(i) += dx(m + i - 1);
        }
        for (BusId i = 1; i < n; ++i)
            if (v(i) < opts.v_floor)
                throw CollapseDetected("voltage collapse at bus " + std::to_string(i) +
                                       ": v=" + fmt_double(v(i)));
    }

    PowerFlowSolution sol;
    for (BusId i = 0; i < n; ++i) theta(i) = detail::wrap_angle(theta(i));
    sol.v = v;
    sol.theta = theta;
    sol.iterations = iterations;
    sol.residual_norm = residual_norm;
    sol.i_branch.reserve(network.branches.size());
    double loss = 0.0;
    for (const auto& br : network.branches) {
        const Complex vi = std::polar(v(br.from), theta(br.from));
        const Complex vj = std::polar(v(br.to), theta(br.to));
        const Complex cur = br.y * (vi - vj);
        sol.i_branch.push_back(cur);
        loss += br.r * std::norm(cur);
    }
    sol.p_loss = loss;
    return sol;
}

inline double line_loss(const NetworkModel& network, const PowerFlowSolution& sol) {
    double loss = 0.0;
    for (std::size_t k = 0; k < network.branches.size(); ++k)
        loss += network.branches[k].r * std::norm(sol.i_branch[k]);
    return loss;
}

}  // namespace avc
