#pragma once

#include <vector>

#include "pathlink/linalg.hpp"

namespace pathlink {

// Photon-pair source bank: d ring sources pumped coherently produce the
// correlated two-qudit state sum_n |alpha_n| e^{i phi_n} |nn>.
struct SourceConfig {
    int d = 0;
    std::vector<double> magnitudes;              // |alpha_n|, sum of squares = 1
    std::vector<double> phases;                  // phi_n, radians
    std::vector<double> indistinguishability;    // x_{jk}, row-major d x d, in [0,1]

    static SourceConfig uniform(int d);          // |alpha_n| = 1/sqrt(d), phi = 0, x = 1
    void validate() const;
};

// Quadratic brightness model: singles/coincidences vs pump power.
struct BrightnessFit {
    double eta_s = 0.0;     // signal detection efficiency
    double eta_i = 0.0;     // idler detection efficiency
    double gamma_eff = 0.0; // pair generation efficiency, 1/(mW^2 s)
    double beta_s = 0.0;    // linear noise, 1/(mW s)
    double beta_i = 0.0;
    double bg_s = 0.0;      // background rates, 1/s
    double bg_i = 0.0;
    double bg_si = 0.0;
    double residual = 0.0;
};

struct RateSample {
    double pump_mw = 0.0;
    double singles_s = 0.0;
    double singles_i = 0.0;
    double coincidences = 0.0;
};

struct PairRates {
    double singles_s = 0.0;
    double singles_i = 0.0;
    double coincidences = 0.0;
};

BipartiteState prepare_bell_like(const SourceConfig& config);

PairRates pair_rates(double pump_mw, const BrightnessFit& fit);

// Least-squares fit of the three quadratic rate equations. Requires at least
// four distinct pump powers; all-zero data returns all-zero parameters.
BrightnessFit fit_brightness(const std::vector<RateSample>& samples);

struct RhomPoint {
    double coincidence = 0.0;     // normalized to fringe peak 1
    double classical_power = 0.0; // cos^2(phi/2), peak 1
};

// Reversed Hong-Ou-Mandel fringe at relative source phase phi. The
// distinguishable fraction (1-x) contributes a flat floor of (1-x)/2 before
// normalization, so the fringe visibility equals x. The quantum fringe has
// period pi in phi; the classical fringe has period 2 pi.
RhomPoint rhom_fringe(double phi, double indistinguishability);

// (I_max - I_min) / (I_max + I_min); throws on empty or all-zero samples.
double visibility(const std::vector<double>& fringe_samples);

}  // namespace pathlink
