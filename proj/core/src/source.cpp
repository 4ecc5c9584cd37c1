#include "pathlink/source.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pathlink {

SourceConfig SourceConfig::uniform(int d) {
    SourceConfig c;
    c.d = d;
    c.magnitudes.assign(d, 1.0 / std::sqrt(static_cast<double>(d)));
    c.phases.assign(d, 0.0);
    c.indistinguishability.assign(static_cast<size_t>(d) * d, 1.0);
    return c;
}

void SourceConfig::validate() const {
    if (d < 1) throw std::invalid_argument("SourceConfig: d must be positive");
    if (static_cast<int>(magnitudes.size()) != d || static_cast<int>(phases.size()) != d)
        throw std::invalid_argument("SourceConfig: magnitude/phase length mismatch");
    double n2 = 0.0;
    for (double m : magnitudes) n2 += m * m;
    if (std::abs(n2 - 1.0) > 1e-12)
        throw std::invalid_argument("SourceConfig: magnitudes not normalized");
    if (!indistinguishability.empty()) {
        if (static_cast<int>(indistinguishability.size()) != d * d)
            throw std::invalid_argument("SourceConfig: indistinguishability shape mismatch");
        for (int j = 0; j < d; ++j) {
            if (std::abs(indistinguishability[static_cast<size_t>(j) * d + j] - 1.0) > 1e-12)
                throw std::invalid_argument("SourceConfig: indistinguishability diagonal must be 1");
            for (int k = 0; k < d; ++k) {
                const double x = indistinguishability[static_cast<size_t>(j) * d + k];
                if (x < 0.0 || x > 1.0) throw std::invalid_argument("SourceConfig: x out of [0,1]");
                if (std::abs(x - indistinguishability[static_cast<size_t>(k) * d + j]) > 1e-12)
                    throw std::invalid_argument("SourceConfig: indistinguishability not symmetric");
            }
        }
    }
}

BipartiteState prepare_bell_like(const SourceConfig& config) {
    config.validate();
    BipartiteState psi;
    psi.d = config.d;
    psi.amp.assign(static_cast<size_t>(config.d) * config.d, cplx(0.0, 0.0));
    psi.mode_magnitudes = config.magnitudes;
    psi.mode_phases = config.phases;
    for (int n = 0; n < config.d; ++n)
        psi.amp[static_cast<size_t>(n) * config.d + n] =
            config.magnitudes[n] * std::polar(1.0, config.phases[n]);
    psi.validate();
    return psi;
}

PairRates pair_rates(double pump_mw, const BrightnessFit& fit) {
    if (pump_mw < 0.0) throw std::invalid_argument("pair_rates: pump power must be >= 0");
    const double p2 = pump_mw * pump_mw;
    PairRates r;
    r.singles_s = fit.eta_s * fit.gamma_eff * p2 + fit.beta_s * pump_mw + fit.bg_s;
    r.singles_i = fit.eta_i * fit.gamma_eff * p2 + fit.beta_i * pump_mw + fit.bg_i;
    r.coincidences = fit.eta_s * fit.eta_i * fit.gamma_eff * p2 + fit.bg_si;
    return r;
}

namespace {

// least-squares polynomial coefficients via normal equations (tiny systems)
std::vector<double> lstsq(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& y) {
    const size_t n = rows.empty() ? 0 : rows[0].size();
    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    std::vector<double> atb(n, 0.0);
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t i = 0; i < n; ++i) {
            atb[i] += rows[r][i] * y[r];
            for (size_t j = 0; j < n; ++j) ata[i][j] += rows[r][i] * rows[r][j];
        }
    }
    // Gaussian elimination with partial pivoting
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
        if (std::abs(ata[piv][col]) < 1e-14)
            throw std::invalid_argument("fit_brightness: rank-deficient sample set");
        std::swap(ata[col], ata[piv]);
        std::swap(atb[col], atb[piv]);
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = ata[r][col] / ata[col][col];
            for (size_t c = col; c < n; ++c) ata[r][c] -= f * ata[col][c];
            atb[r] -= f * atb[col];
        }
    }
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = atb[i] / ata[i][i];
    return x;
}

}  // namespace

BrightnessFit fit_brightness(const std::vector<RateSample>& samples) {
    std::set<double> powers;
    for (const RateSample& s : samples) powers.insert(s.pump_mw);
    if (powers.size() < 4)
        throw std::invalid_argument("fit_brightness: need at least 4 distinct pump powers");

    bool all_zero = true;
    for (const RateSample& s : samples)
        if (s.singles_s != 0.0 || s.singles_i != 0.0 || s.coincidences != 0.0) all_zero = false;
    if (all_zero) return BrightnessFit{};

    std::vector<std::vector<double>> q3, q2;
    std::vector<double> ys, yi, yc;
    for (const RateSample& s : samples) {
        q3.push_back({s.pump_mw * s.pump_mw, s.pump_mw, 1.0});
        q2.push_back({s.pump_mw * s.pump_mw, 1.0});
        ys.push_back(s.singles_s);
        yi.push_back(s.singles_i);
        yc.push_back(s.coincidences);
    }
    const std::vector<double> cs = lstsq(q3, ys);  // {eta_s*gamma, beta_s, bg_s}
    const std::vector<double> ci = lstsq(q3, yi);
    const std::vector<double> cc = lstsq(q2, yc);  // {eta_s*eta_i*gamma, bg_si}

    BrightnessFit f;
    f.beta_s = cs[1];
    f.bg_s = cs[2];
    f.beta_i = ci[1];
    f.bg_i = ci[2];
    f.bg_si = cc[1];
    const double as = cs[0], ai = ci[0], ac = cc[0];
    if (ac > 1e-15 && as > 0.0 && ai > 0.0) {
        f.gamma_eff = as * ai / ac;
        f.eta_s = as / f.gamma_eff;
        f.eta_i = ai / f.gamma_eff;
    }

    double sse = 0.0;
    for (const RateSample& s : samples) {
        const PairRates r = pair_rates(s.pump_mw, f);
        sse += (r.singles_s - s.singles_s) * (r.singles_s - s.singles_s);
        sse += (r.singles_i - s.singles_i) * (r.singles_i - s.singles_i);
        sse += (r.coincidences - s.coincidences) * (r.coincidences - s.coincidences);
    }
    f.residual = std::sqrt(sse);
    return f;
}

RhomPoint rhom_fringe(double phi, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("rhom_fringe: x out of [0,1]");
    const double s = std::sin(phi);
    const double raw = x * s * s + 0.5 * (1.0 - x);
    const double peak = x + 0.5 * (1.0 - x);
    RhomPoint p;
    p.coincidence = peak > 0.0 ? raw / peak : 0.0;
    const double c = std::cos(0.5 * phi);
    p.classical_power = c * c;
    return p;
}

double visibility(const std::vector<double>& fringe_samples) {
    if (fringe_samples.empty()) throw std::invalid_argument("visibility: empty sample list");
    double lo = fringe_samples[0], hi = fringe_samples[0];
    for (double v : fringe_samples) {
        if (v < 0.0) throw std::invalid_argument("visibility: negative sample");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi + lo <= 0.0) throw std::invalid_argument("visibility: all-zero samples");
    return (hi - lo) / (hi + lo);
}

}  // namespace pathlink
