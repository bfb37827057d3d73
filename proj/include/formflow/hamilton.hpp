#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "formflow/expr.hpp"
#include "formflow/forms.hpp"

namespace formflow {

// H(t, q_1..q_m, p_1..p_m) with cached first partials.
class HamiltonianSystem {
public:
    HamiltonianSystem(Expression H, std::vector<std::string> q_names, std::vector<std::string> p_names,
                      std::string t_name = "t");

    // q1..qm, p1..pm, t.
    static HamiltonianSystem with_default_names(Expression H, std::size_t m);

    std::size_t degrees_of_freedom() const noexcept { return q_names_.size(); }
    const Expression& H() const noexcept { return H_; }
    const Expression& dH_dq(std::size_t j) const { return dH_dq_.at(j); }
    const Expression& dH_dp(std::size_t j) const { return dH_dp_.at(j); }
    const std::string& t_name() const noexcept { return t_name_; }
    const std::vector<std::string>& q_names() const noexcept { return q_names_; }
    const std::vector<std::string>& p_names() const noexcept { return p_names_; }
    bool is_autonomous() const { return !H_.depends_on(t_name_); }

    double energy(double t, std::span<const double> q, std::span<const double> p) const;

    struct Gradient {
        std::vector<double> dH_dq;
        std::vector<double> dH_dp;
    };
    Gradient gradient(double t, std::span<const double> q, std::span<const double> p) const;

private:
    std::vector<double> pack(double t, std::span<const double> q, std::span<const double> p) const;

    Expression H_;
    std::vector<std::string> q_names_;
    std::vector<std::string> p_names_;
    std::string t_name_;
    std::vector<std::string> phase_names_;  // t, q..., p...
    std::vector<Expression> dH_dq_;
    std::vector<Expression> dH_dp_;
    CompiledExpression H_c_;
    std::vector<CompiledExpression> dH_dq_c_;
    std::vector<CompiledExpression> dH_dp_c_;
};

struct PhaseVelocity {
    std::vector<double> dq;
    std::vector<double> dp;
};

// dq_j/dt = dH/dp_j, dp_j/dt = -dH/dq_j
PhaseVelocity hamilton_rhs(const HamiltonianSystem& sys, double t, std::span<const double> q,
                           std::span<const double> p);

struct PhaseState {
    double t = 0.0;
    std::vector<double> q;
    std::vector<double> p;
};

struct PhaseTrajectory {
    double dt = 0.0;
    std::vector<PhaseState> samples;
    // S(t) = integral of L = p . dq/dt - H from the first sample.
    std::vector<double> action;
};

// RK4 on the system augmented with dS/dt = L, so the action shares the stages
// of the state.
PhaseTrajectory integrate_hamilton(const HamiltonianSystem& sys, std::span<const double> q0,
                                   std::span<const double> p0, double t0, double dt, int steps);

struct PoincareReport {
    double max_residual = 0.0;
    std::size_t worst_step = 0;  // residual of the step ending at this sample
};

// max over steps of |dS - (-H dt + p_j dq_j)| / dt with the 1-form integrated
// by the midpoint (endpoint average) rule.
PoincareReport poincare_residual(const HamiltonianSystem& sys, const PhaseTrajectory& traj);

// max |H(t) - H(t0)| along the trajectory.
double energy_drift(const HamiltonianSystem& sys, const PhaseTrajectory& traj);

struct SkippedPhaseSample {
    std::size_t index;
    std::string reason;
};

struct HamiltonJacobiReport {
    double max_residual = 0.0;
    std::size_t worst_sample = 0;
    std::vector<SkippedPhaseSample> skipped;
};

// |ds/dt + H(t, q, ds/dq)| over samples given as (t, q_1..q_m) tuples.
HamiltonJacobiReport hamilton_jacobi_residual(const HamiltonianSystem& sys, const Expression& s_field,
                                              const std::vector<std::vector<double>>& samples);

// Columns: t, q1..qm, p1..pm, S, H
void write_trajectory_csv(std::ostream& out, const HamiltonianSystem& sys, const PhaseTrajectory& traj);

}  // namespace formflow
