#include "formflow/hamilton.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "formflow/io.hpp"
#include "formflow/numerics.hpp"

namespace formflow {

HamiltonianSystem::HamiltonianSystem(Expression H, std::vector<std::string> q_names,
                                     std::vector<std::string> p_names, std::string t_name)
    : H_(std::move(H)), q_names_(std::move(q_names)), p_names_(std::move(p_names)), t_name_(std::move(t_name)) {
    if (q_names_.empty()) throw InvalidArgument("Hamiltonian system needs at least one degree of freedom");
    if (q_names_.size() != p_names_.size()) throw InvalidArgument("q and p name lists differ in length");
    phase_names_.push_back(t_name_);
    phase_names_.insert(phase_names_.end(), q_names_.begin(), q_names_.end());
    phase_names_.insert(phase_names_.end(), p_names_.begin(), p_names_.end());
    std::set<std::string> unique(phase_names_.begin(), phase_names_.end());
    if (unique.size() != phase_names_.size()) throw InvalidArgument("phase variable names must be distinct");
    for (const auto& v : H_.free_variables()) {
        if (!unique.contains(v)) throw InvalidArgument("H references undeclared variable '" + v + "'");
    }
    for (std::size_t j = 0; j < q_names_.size(); ++j) {
        dH_dq_.push_back(differentiate(H_, q_names_[j]));
        dH_dp_.push_back(differentiate(H_, p_names_[j]));
        dH_dq_c_.emplace_back(dH_dq_.back(), phase_names_);
        dH_dp_c_.emplace_back(dH_dp_.back(), phase_names_);
    }
    H_c_ = CompiledExpression(H_, phase_names_);
}

HamiltonianSystem HamiltonianSystem::with_default_names(Expression H, std::size_t m) {
    std::vector<std::string> q, p;
    for (std::size_t j = 1; j <= m; ++j) {
        q.push_back("q" + std::to_string(j));
        p.push_back("p" + std::to_string(j));
    }
    return HamiltonianSystem(std::move(H), std::move(q), std::move(p));
}

std::vector<double> HamiltonianSystem::pack(double t, std::span<const double> q, std::span<const double> p) const {
    const std::size_t m = degrees_of_freedom();
    if (q.size() != m || p.size() != m) throw InvalidArgument("phase point dimension does not match system");
    std::vector<double> v;
    v.reserve(2 * m + 1);
    v.push_back(t);
    v.insert(v.end(), q.begin(), q.end());
    v.insert(v.end(), p.begin(), p.end());
    return v;
}

double HamiltonianSystem::energy(double t, std::span<const double> q, std::span<const double> p) const {
    return H_c_(pack(t, q, p));
}

HamiltonianSystem::Gradient HamiltonianSystem::gradient(double t, std::span<const double> q,
                                                        std::span<const double> p) const {
    const auto v = pack(t, q, p);
    Gradient g;
    for (std::size_t j = 0; j < degrees_of_freedom(); ++j) {
        g.dH_dq.push_back(dH_dq_c_[j](v));
        g.dH_dp.push_back(dH_dp_c_[j](v));
    }
    return g;
}

PhaseVelocity hamilton_rhs(const HamiltonianSystem& sys, double t, std::span<const double> q,
                           std::span<const double> p) {
    auto g = sys.gradient(t, q, p);
    PhaseVelocity v;
    v.dq = std::move(g.dH_dp);
    v.dp.reserve(g.dH_dq.size());
    for (double d : g.dH_dq) v.dp.push_back(-d);
    return v;
}

PhaseTrajectory integrate_hamilton(const HamiltonianSystem& sys, std::span<const double> q0,
                                   std::span<const double> p0, double t0, double dt, int steps) {
    if (!(dt > 0.0)) throw InvalidArgument("integrate_hamilton: dt must be positive");
    if (steps < 0) throw InvalidArgument("integrate_hamilton: steps must be non-negative");
    const std::size_t m = sys.degrees_of_freedom();
    if (q0.size() != m || p0.size() != m) throw InvalidArgument("initial state dimension does not match system");

    // y = [t, q..., p..., S]
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        const std::span<const double> q(y.data() + 1, m);
        const std::span<const double> p(y.data() + 1 + m, m);
        const auto v = hamilton_rhs(sys, y[0], q, p);
        dy[0] = 1.0;
        double lagrangian = -sys.energy(y[0], q, p);
        for (std::size_t j = 0; j < m; ++j) {
            dy[1 + j] = v.dq[j];
            dy[1 + m + j] = v.dp[j];
            lagrangian += p[j] * v.dq[j];
        }
        dy[1 + 2 * m] = lagrangian;
    };

    PhaseTrajectory traj;
    traj.dt = dt;
    std::vector<double> y{t0};
    y.insert(y.end(), q0.begin(), q0.end());
    y.insert(y.end(), p0.begin(), p0.end());
    y.push_back(0.0);
    auto record = [&](const std::vector<double>& state) {
        PhaseState s;
        s.t = state[0];
        s.q.assign(state.begin() + 1, state.begin() + 1 + static_cast<std::ptrdiff_t>(m));
        s.p.assign(state.begin() + 1 + static_cast<std::ptrdiff_t>(m), state.begin() + 1 + 2 * static_cast<std::ptrdiff_t>(m));
        traj.samples.push_back(std::move(s));
        traj.action.push_back(state.back());
    };
    record(y);
    for (int k = 0; k < steps; ++k) {
        y = rk4_step(rhs, y, dt);
        // Uniform grid in t regardless of accumulated rounding.
        y[0] = t0 + static_cast<double>(k + 1) * dt;
        if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
            throw Error("integrate_hamilton: non-finite state after step " + std::to_string(k + 1));
        }
        record(y);
    }
    return traj;
}

PoincareReport poincare_residual(const HamiltonianSystem& sys, const PhaseTrajectory& traj) {
    if (traj.samples.empty()) throw InvalidArgument("poincare_residual: empty trajectory");
    PoincareReport report;
    const std::size_t m = sys.degrees_of_freedom();
    double h_prev = sys.energy(traj.samples[0].t, traj.samples[0].q, traj.samples[0].p);
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        const auto& a = traj.samples[k - 1];
        const auto& b = traj.samples[k];
        const double h_next = sys.energy(b.t, b.q, b.p);
        const double step = b.t - a.t;
        double form = -0.5 * (h_prev + h_next) * step;
        for (std::size_t j = 0; j < m; ++j) form += 0.5 * (a.p[j] + b.p[j]) * (b.q[j] - a.q[j]);
        const double residual = std::abs((traj.action[k] - traj.action[k - 1]) - form) / step;
        if (residual > report.max_residual) {
            report.max_residual = residual;
            report.worst_step = k;
        }
        h_prev = h_next;
    }
    return report;
}

double energy_drift(const HamiltonianSystem& sys, const PhaseTrajectory& traj) {
    if (traj.samples.empty()) return 0.0;
    const auto& s0 = traj.samples.front();
    const double h0 = sys.energy(s0.t, s0.q, s0.p);
    double drift = 0.0;
    for (const auto& s : traj.samples) drift = std::max(drift, std::abs(sys.energy(s.t, s.q, s.p) - h0));
    return drift;
}

HamiltonJacobiReport hamilton_jacobi_residual(const HamiltonianSystem& sys, const Expression& s_field,
                                              const std::vector<std::vector<double>>& samples) {
    const std::size_t m = sys.degrees_of_freedom();
    std::vector<std::string> field_names{sys.t_name()};
    field_names.insert(field_names.end(), sys.q_names().begin(), sys.q_names().end());
    for (const auto& v : s_field.free_variables()) {
        if (std::find(field_names.begin(), field_names.end(), v) == field_names.end()) {
            throw InvalidArgument("action field references '" + v + "', expected only t and q");
        }
    }
    const CompiledExpression ds_dt(differentiate(s_field, sys.t_name()), field_names);
    std::vector<CompiledExpression> ds_dq;
    for (const auto& q : sys.q_names()) ds_dq.emplace_back(differentiate(s_field, q), field_names);

    HamiltonJacobiReport report;
    bool any = false;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& point = samples[k];
        if (point.size() != m + 1) throw InvalidArgument("Hamilton-Jacobi sample must be (t, q_1..q_m)");
        try {
            std::vector<double> p;
            for (const auto& d : ds_dq) p.push_back(d(point));
            const std::span<const double> q(point.data() + 1, m);
            const double r = std::abs(ds_dt(point) + sys.energy(point[0], q, p));
            if (!any || r > report.max_residual) {
                report.max_residual = r;
                report.worst_sample = k;
                any = true;
            }
        } catch (const SingularEvaluation& e) {
            report.skipped.push_back({k, e.what()});
        }
    }
    return report;
}

void write_trajectory_csv(std::ostream& out, const HamiltonianSystem& sys, const PhaseTrajectory& traj) {
    const std::size_t m = sys.degrees_of_freedom();
    out << "t";
    for (std::size_t j = 1; j <= m; ++j) out << ",q" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",p" << j;
    out << ",S,H\n";
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& s = traj.samples[k];
        out << format_double(s.t);
        for (double v : s.q) out << ',' << format_double(v);
        for (double v : s.p) out << ',' << format_double(v);
        out << ',' << format_double(traj.action[k]) << ',' << format_double(sys.energy(s.t, s.q, s.p)) << '\n';
    }
}

}  // namespace formflow
