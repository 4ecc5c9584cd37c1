#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "pathlink/channel.hpp"
#include "pathlink/linalg.hpp"
#include "pathlink/rng.hpp"

namespace pathlink {

// Fitted interferometer fringe P(x) = p_max cos^2((nu x - offset)/2) + p_min.
// The drive axis x is phase (radians) when nu = 1; the offset is wrapped to
// (-pi, pi]. ok is false for degenerate or diverged fits.
struct FringeFit {
    double offset = 0.0;
    double p_max = 1.0;
    double p_min = 0.0;
    double nu = 1.0;
    double residual_rms = 0.0;
    bool ok = false;
};

// Means and spreads of the non-offset fringe parameters, measured once from
// dense fringes; four-point fits are bounded to mean +- (3, 2, 2) sigma for
// (p_max, p_min, nu).
struct FitPriors {
    double p_max_mean = 1.0, p_max_sigma = 0.05;
    double p_min_mean = 0.0, p_min_sigma = 0.02;
    double nu_mean = 1.0, nu_sigma = 0.05;

    static constexpr double kPMaxMult = 3.0;
    static constexpr double kPMinMult = 2.0;
    static constexpr double kNuMult = 2.0;
};

struct FitOptions {
    double min_span = 1e-3;              // required drive span
    double residual_rel_threshold = 0.1; // flagged when rms residual exceeds this x fitted amplitude
    int multistart_offsets = 8;
    int max_iterations = 60;
};

struct ScanPoint {
    double drive = 0.0;
    double power = 0.0;
};

// Bounded Levenberg-Marquardt fit of the four-parameter fringe model, with
// multistart over the offset. Throws std::invalid_argument when fewer than
// four points are given or the drive span is below options.min_span.
FringeFit fit_fringe(const std::vector<ScanPoint>& scan, const FitPriors& priors,
                     const FitOptions& options = {});

// Characterisation step: fit n_fringes dense fringes (sampled from the given
// power readout) with wide bounds and return the parameter means and sigmas.
FitPriors characterize_priors(const std::function<double(double)>& sample_power,
                              int n_fringes = 30, int points_per_fringe = 16);

// Two measurement rounds of simultaneously interfered mode pairs. Round one
// pairs (n, n+1) for even n; round two pairs (n+1, n+2), wrapping through
// (d-1, 0) so the union graph is connected through reference mode 0.
struct StabilisationPlan {
    int d = 0;
    std::vector<std::pair<int, int>> round1;
    std::vector<std::pair<int, int>> round2;

    std::vector<std::pair<int, int>> all_pairs() const;
};

StabilisationPlan build_plan(int d);

// Signed chain of measured pair offsets from mode 0 to each mode, following
// the shortest path in the plan's pair graph.
struct OffsetChains {
    std::vector<std::pair<int, int>> edges;                    // round1 then round2
    std::vector<std::vector<std::pair<int, int>>> paths;       // per mode 1..d-1: (edge index, sign)

    int max_chain_length() const;
};

OffsetChains build_chains(const StabilisationPlan& plan);

// Combine both rounds' measured offsets Delta_{n,n'} = phi_{n'} - phi_n into
// Delta_{0,n} for n = 1..d-1, wrapping after every addition.
std::vector<double> infer_offsets(const std::vector<double>& round1_offsets,
                                  const std::vector<double>& round2_offsets,
                                  const StabilisationPlan& plan);

// Receiver compensation: phase shifter on mode n set to -Delta_{0,n}.
void apply_corrections(ChannelState& channel, const std::vector<double>& offsets);

struct TimingBudget {
    double t_set_config_s = 0.07;
    double t_measure_point_s = 0.02;
    double t_fit_s = 0.005;
    double t_quantum_window_s = 0.2;

    // per-iteration stabilisation time: per round one circuit configuration,
    // then (set + measure) per fringe point and a fit, plus the final
    // correction write
    double stab_iteration_s(int rounds, int points_per_fringe) const {
        return rounds * (t_set_config_s + points_per_fringe * (t_set_config_s + t_measure_point_s) +
                         t_fit_s) +
               t_set_config_s;
    }
    double duty_cycle(int rounds, int points_per_fringe) const {
        const double stab = stab_iteration_s(rounds, points_per_fringe);
        return t_quantum_window_s / (t_quantum_window_s + stab);
    }
};

// Classical fidelity of the Hadamard-superposition probe through a phase-only
// channel: |<H_d+| U |H_d+>|^2 from the effective relative phases.
double hadamard_fidelity(const ChannelState& channel);

struct SessionOptions {
    double duration_s = 120.0;
    bool stabilise = true;
    int points_per_fringe = 4;
    double point_spacing_rad = 1.5;
    int window_substeps = 8;
    bool characterize = true;
    int characterize_fringes = 30;
    int characterize_points = 16;
    std::uint64_t seed = 1;
};

struct SessionRow {
    double t_s = 0.0;
    bool quantum = false;          // quantum window vs stabilisation iteration
    double fidelity = 0.0;
    double dt_since_correction = 0.0;
    std::vector<double> residual_phases;
};

struct SessionResult {
    std::vector<SessionRow> rows;
    double duty_cycle = 0.0;
    double stab_iteration_s = 0.0;
    double mean_quantum_fidelity = 0.0;
    double quantum_fidelity_variance = 0.0;
};

// Called once per quantum-window substep with the current channel.
using QuantumCallback =
    std::function<void(int window_index, double t_s, double dt_s, const ChannelState&)>;

// Interleave stabilisation iterations with quantum acquisition windows on
// simulated time. With stabilisation off the session is back-to-back quantum
// windows over the same duration.
SessionResult run_session(ChannelState channel, const DriftModel& drift,
                          const StabilisationPlan& plan, const TimingBudget& budget,
                          const SessionOptions& options, const QuantumCallback& callback = nullptr);

struct ScalingRow {
    int d = 0;
    double epsilon = 0.0;
    double mean_fidelity = 0.0;
    double std_fidelity = 0.0;
};

// Monte-Carlo of stabilisation quality vs dimension and per-measurement phase
// error. Pair errors are normal with mean absolute error epsilon (sigma =
// epsilon sqrt(pi/2)) and propagate through the inference chains; reported is
// the Hadamard-probe fidelity of the residual phases.
std::vector<ScalingRow> error_scaling_study(const std::vector<int>& d_list,
                                            const std::vector<double>& epsilon_list,
                                            int trials, std::uint64_t master_seed);

// Mean absolute fringe-offset error per four-point spacing at multiplicative
// readout noise sigma_P/P; reproduces the point-spacing plateau.
std::vector<double> fringe_spacing_study(const std::vector<double>& spacings_rad,
                                         double readout_noise_rel, int trials,
                                         const FitPriors& priors, std::uint64_t master_seed);

}  // namespace pathlink
