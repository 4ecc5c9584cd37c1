#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathlink/linalg.hpp"
#include "pathlink/rng.hpp"

namespace pathlink {

// Signal-side inter-chip link: per-mode phase offsets, power transmissivities,
// free-space path-length mismatches and receiver-side correction/attenuator
// settings. Phases are stored wrapped to (-pi, pi].
struct ChannelState {
    int d = 0;
    std::vector<double> phases;               // drifting link phases, rad
    std::vector<double> transmissivities;     // power efficiency per mode, (0,1]
    std::vector<double> mismatches_m;         // path-length mismatch, metres
    std::vector<double> attenuator_phases;    // MZI attenuator setting, rad (pi = full transmission)
    std::vector<double> corrections;          // receiver phase-shifter settings, rad
    double time_s = 0.0;

    static ChannelState ideal(int d);
    void validate() const;
    // effective phase seen by the state: wrap(link phase + correction)
    double effective_phase(int mode) const;
    // attenuator power transmission sin^2(phi/2)
    double attenuation(int mode) const;
    // effective relative phases vs mode 0, length d-1
    std::vector<double> residual_phases() const;
};

struct Sinusoid {
    double freq_hz = 0.0;
    double amplitude_rad = 0.0;
    double phase_rad = 0.0;
};

// Stochastic stand-in for the measured fibre drift spectra: a Gaussian random
// walk plus optional deterministic sinusoids, per mode, plus multiplicative
// readout noise on classical power measurements.
struct DriftModel {
    std::vector<double> random_walk_sigma;            // rad/sqrt(s), per mode
    std::vector<std::vector<Sinusoid>> sinusoids;     // per mode
    double readout_noise_rel = 0.0;                   // sigma_P / P
    bool uniform_phase_per_window = false;            // fast-drift limit

    static DriftModel preset(const std::string& name, int d);  // none|onchip|scf|scf+mcf|uniform
    void validate(int d) const;
};

struct DetectorEfficiencies {
    std::vector<double> eta;  // per output port, (0,1], max 1 after relative normalization

    static DetectorEfficiencies unit(int n);
    // normalise raw singles counts so the best detector has efficiency 1
    static DetectorEfficiencies from_counts(const std::vector<double>& counts);
    void validate() const;
};

// Advance link phases by dt seconds. Deterministic given the rng state.
void step_drift(ChannelState& state, const DriftModel& model, double dt_s, Rng& rng);

struct ChannelOutput {
    BipartiteState state;
    double survival_probability = 0.0;
};

// Apply per-mode loss, attenuators and phases to the signal modes, then
// renormalise; the pre-normalisation norm is returned as survival probability.
ChannelOutput apply_channel(const ChannelState& state, const BipartiteState& psi);

// Normalised interferometer output power for modes (n, n') probed at analyser
// phase theta and wavelength lambda:
//   P = sin^2(pi dL / lambda + (theta + Delta_{n,n'}) / 2),
// with dL = dL_{n'} - dL_n and Delta_{n,n'} = phi_{n'} - phi_n. Multiplicative
// readout noise is applied when noise is given, clamped at zero.
double classical_fringe(const ChannelState& state, int mode_n, int mode_np, double theta,
                        double lambda_m, double readout_noise_rel = 0.0, Rng* rng = nullptr);

// Path-length mismatch from the offset difference of fringes taken at the
// signal and pump wavelengths: dL = (offset_s - offset_p) / (2 pi (1/l_s - 1/l_p)),
// with the offset difference wrapped so the branch nearest zero is returned.
double estimate_mismatch(double offset_signal, double offset_pump,
                         double lambda_signal_m, double lambda_pump_m);

// Attenuator phases that bring every mode's effective efficiency down to the
// lossiest mode's: phi_x = 2 asin(sqrt(alpha_l / alpha_x)).
std::vector<double> balance_losses(const std::vector<double>& efficiencies);

// Detector-efficiency corrected outcome probabilities: counts are divided by
// eta_a*eta_b and renormalised to sum 1.
std::vector<double> correct_efficiencies(const std::vector<double>& counts, int rows, int cols,
                                         const DetectorEfficiencies& eta_a,
                                         const DetectorEfficiencies& eta_b);

}  // namespace pathlink
