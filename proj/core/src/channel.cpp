#include "pathlink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pathlink {

ChannelState ChannelState::ideal(int d) {
    if (d < 1) throw std::invalid_argument("ChannelState: d must be positive");
    ChannelState s;
    s.d = d;
    s.phases.assign(d, 0.0);
    s.transmissivities.assign(d, 1.0);
    s.mismatches_m.assign(d, 0.0);
    s.attenuator_phases.assign(d, kPi);  // full transmission
    s.corrections.assign(d, 0.0);
    return s;
}

void ChannelState::validate() const {
    if (static_cast<int>(phases.size()) != d || static_cast<int>(transmissivities.size()) != d ||
        static_cast<int>(mismatches_m.size()) != d || static_cast<int>(attenuator_phases.size()) != d ||
        static_cast<int>(corrections.size()) != d)
        throw std::runtime_error("ChannelState: field length mismatch");
    for (double t : transmissivities)
        if (t < 0.0 || t > 1.0) throw std::runtime_error("ChannelState: transmissivity out of [0,1]");
    for (double p : phases)
        if (p <= -kPi - 1e-12 || p > kPi + 1e-12) throw std::runtime_error("ChannelState: phase not wrapped");
}

double ChannelState::effective_phase(int mode) const {
    return wrap_phase(phases[mode] + corrections[mode]);
}

double ChannelState::attenuation(int mode) const {
    const double s = std::sin(0.5 * attenuator_phases[mode]);
    return s * s;
}

std::vector<double> ChannelState::residual_phases() const {
    std::vector<double> r(d - 1);
    const double ref = effective_phase(0);
    for (int n = 1; n < d; ++n) r[n - 1] = wrap_phase(effective_phase(n) - ref);
    return r;
}

DriftModel DriftModel::preset(const std::string& name, int d) {
    DriftModel m;
    m.sinusoids.assign(d, {});
    m.readout_noise_rel = 0.01;
    if (name == "none") {
        m.random_walk_sigma.assign(d, 0.0);
        m.readout_noise_rel = 0.0;
    } else if (name == "onchip") {
        m.random_walk_sigma.assign(d, 0.002);
    } else if (name == "scf") {
        m.random_walk_sigma.assign(d, 0.25);
    } else if (name == "scf+mcf") {
        m.random_walk_sigma.assign(d, 0.12);
    } else if (name == "uniform") {
        m.random_walk_sigma.assign(d, 0.0);
        m.uniform_phase_per_window = true;
    } else {
        throw std::invalid_argument("DriftModel: unknown preset '" + name + "'");
    }
    return m;
}

void DriftModel::validate(int d) const {
    if (static_cast<int>(random_walk_sigma.size()) != d)
        throw std::runtime_error("DriftModel: sigma length mismatch");
    for (double s : random_walk_sigma)
        if (s < 0.0) throw std::runtime_error("DriftModel: negative sigma");
    if (readout_noise_rel < 0.0) throw std::runtime_error("DriftModel: negative readout noise");
    for (const auto& list : sinusoids)
        for (const Sinusoid& s : list)
            if (s.amplitude_rad < 0.0 || s.freq_hz < 0.0)
                throw std::runtime_error("DriftModel: negative sinusoid parameter");
}

DetectorEfficiencies DetectorEfficiencies::unit(int n) {
    DetectorEfficiencies e;
    e.eta.assign(n, 1.0);
    return e;
}

DetectorEfficiencies DetectorEfficiencies::from_counts(const std::vector<double>& counts) {
    if (counts.empty()) throw std::invalid_argument("DetectorEfficiencies: empty counts");
    const double best = *std::max_element(counts.begin(), counts.end());
    if (best <= 0.0) throw std::invalid_argument("DetectorEfficiencies: all counts zero");
    DetectorEfficiencies e;
    for (double c : counts) {
        if (c <= 0.0) throw std::invalid_argument("DetectorEfficiencies: nonpositive count");
        e.eta.push_back(c / best);
    }
    return e;
}

void DetectorEfficiencies::validate() const {
    for (double v : eta)
        if (v <= 0.0 || v > 1.0 + 1e-12)
            throw std::runtime_error("DetectorEfficiencies: efficiency out of (0,1]");
}

void step_drift(ChannelState& state, const DriftModel& model, double dt_s, Rng& rng) {
    if (dt_s <= 0.0) throw std::invalid_argument("step_drift: dt must be positive");
    model.validate(state.d);
    const double t0 = state.time_s;
    const double t1 = t0 + dt_s;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int n = 0; n < state.d; ++n) {
        double dphi = 0.0;
        const double sigma = model.random_walk_sigma[n];
        if (sigma > 0.0) dphi += sigma * std::sqrt(dt_s) * gauss(rng);
        if (n < static_cast<int>(model.sinusoids.size()))
            for (const Sinusoid& s : model.sinusoids[n])
                dphi += s.amplitude_rad * (std::sin(2.0 * kPi * s.freq_hz * t1 + s.phase_rad) -
                                           std::sin(2.0 * kPi * s.freq_hz * t0 + s.phase_rad));
        state.phases[n] = wrap_phase(state.phases[n] + dphi);
    }
    state.time_s = t1;
}

ChannelOutput apply_channel(const ChannelState& state, const BipartiteState& psi) {
    if (psi.d != state.d) throw std::invalid_argument("apply_channel: mode count mismatch");
    ChannelOutput out;
    out.state.d = psi.d;
    out.state.amp.resize(psi.amp.size());
    double norm2 = 0.0;
    for (int i = 0; i < psi.d; ++i) {
        for (int j = 0; j < psi.d; ++j) {
            const double eff = state.transmissivities[j] * state.attenuation(j);
            const cplx factor = std::sqrt(eff) * std::polar(1.0, state.effective_phase(j));
            const cplx v = psi.amp[static_cast<size_t>(i) * psi.d + j] * factor;
            out.state.amp[static_cast<size_t>(i) * psi.d + j] = v;
            norm2 += std::norm(v);
        }
    }
    out.survival_probability = norm2;
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (cplx& z : out.state.amp) z *= inv;
    }
    return out;
}

double classical_fringe(const ChannelState& state, int mode_n, int mode_np, double theta,
                        double lambda_m, double readout_noise_rel, Rng* rng) {
    if (mode_n == mode_np) throw std::invalid_argument("classical_fringe: modes must differ");
    if (lambda_m <= 0.0) throw std::invalid_argument("classical_fringe: wavelength must be positive");
    const double dl = state.mismatches_m[mode_np] - state.mismatches_m[mode_n];
    const double delta = state.phases[mode_np] - state.phases[mode_n];
    const double s = std::sin(kPi * dl / lambda_m + 0.5 * (theta + delta));
    double p = s * s;
    if (readout_noise_rel > 0.0 && rng != nullptr) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        p = std::max(0.0, p * (1.0 + readout_noise_rel * gauss(*rng)));
    }
    return p;
}

double estimate_mismatch(double offset_signal, double offset_pump,
                         double lambda_signal_m, double lambda_pump_m) {
    if (lambda_signal_m == lambda_pump_m)
        throw std::invalid_argument("estimate_mismatch: wavelengths must differ");
    const double dphi = wrap_phase(offset_signal - offset_pump);
    return dphi / (2.0 * kPi * (1.0 / lambda_signal_m - 1.0 / lambda_pump_m));
}

std::vector<double> balance_losses(const std::vector<double>& efficiencies) {
    if (efficiencies.empty()) throw std::invalid_argument("balance_losses: empty input");
    for (double a : efficiencies)
        if (a <= 0.0 || a > 1.0) throw std::invalid_argument("balance_losses: efficiency out of (0,1]");
    const double lossiest = *std::min_element(efficiencies.begin(), efficiencies.end());
    std::vector<double> phases;
    phases.reserve(efficiencies.size());
    for (double a : efficiencies)
        phases.push_back(2.0 * std::asin(std::sqrt(lossiest / a)));
    return phases;
}

std::vector<double> correct_efficiencies(const std::vector<double>& counts, int rows, int cols,
                                         const DetectorEfficiencies& eta_a,
                                         const DetectorEfficiencies& eta_b) {
    if (static_cast<int>(counts.size()) != rows * cols)
        throw std::invalid_argument("correct_efficiencies: counts shape mismatch");
    if (static_cast<int>(eta_a.eta.size()) != rows || static_cast<int>(eta_b.eta.size()) != cols)
        throw std::invalid_argument("correct_efficiencies: efficiency length mismatch");
    eta_a.validate();
    eta_b.validate();
    std::vector<double> p(counts.size());
    double total = 0.0;
    for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) {
            const double c = counts[static_cast<size_t>(a) * cols + b];
            if (c < 0.0) throw std::invalid_argument("correct_efficiencies: negative count");
            const double v = c / (eta_a.eta[a] * eta_b.eta[b]);
            p[static_cast<size_t>(a) * cols + b] = v;
            total += v;
        }
    if (total <= 0.0) throw std::invalid_argument("correct_efficiencies: zero total counts");
    for (double& v : p) v /= total;
    return p;
}

}  // namespace pathlink
