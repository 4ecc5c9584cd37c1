#include "pathlink/stabiliser.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace pathlink {

namespace {

// fringe model and Jacobian; q = {offset, p_max, p_min, nu}
double fringe_model(double x, const std::array<double, 4>& q) {
    const double u = 0.5 * (q[3] * x - q[0]);
    const double c = std::cos(u);
    return q[1] * c * c + q[2];
}

void fringe_jacobian(double x, const std::array<double, 4>& q, std::array<double, 4>& row) {
    const double u = 0.5 * (q[3] * x - q[0]);
    const double s2u = std::sin(2.0 * u);
    const double c = std::cos(u);
    row[0] = 0.5 * q[1] * s2u;
    row[1] = c * c;
    row[2] = 1.0;
    row[3] = -0.5 * q[1] * x * s2u;
}

// Levenberg-Marquardt with box projection; 4 parameters, tiny scans.
std::pair<std::array<double, 4>, double> lm_bounded(const std::vector<ScanPoint>& scan,
                                                    std::array<double, 4> q,
                                                    const std::array<double, 4>& lo,
                                                    const std::array<double, 4>& hi,
                                                    int max_iterations) {
    const size_t n = scan.size();
    auto clampq = [&](std::array<double, 4>& p) {
        for (int i = 0; i < 4; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    };
    auto cost = [&](const std::array<double, 4>& p) {
        double c = 0.0;
        for (const ScanPoint& s : scan) {
            const double r = fringe_model(s.drive, p) - s.power;
            c += r * r;
        }
        return c;
    };
    clampq(q);
    double current = cost(q);
    double lambda = 1e-3;
    for (int iter = 0; iter < max_iterations; ++iter) {
        double jtj[4][4] = {};
        double jtr[4] = {};
        std::array<double, 4> row{};
        for (size_t k = 0; k < n; ++k) {
            fringe_jacobian(scan[k].drive, q, row);
            const double r = fringe_model(scan[k].drive, q) - scan[k].power;
            for (int i = 0; i < 4; ++i) {
                jtr[i] += row[i] * r;
                for (int j = 0; j < 4; ++j) jtj[i][j] += row[i] * row[j];
            }
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 14; ++attempt) {
            double m[4][5];
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) m[i][j] = jtj[i][j];
                m[i][i] += lambda * std::max(jtj[i][i], 1e-12);
                m[i][4] = -jtr[i];
            }
            // Gaussian elimination with partial pivoting
            bool singular = false;
            for (int col = 0; col < 4; ++col) {
                int piv = col;
                for (int r2 = col + 1; r2 < 4; ++r2)
                    if (std::abs(m[r2][col]) > std::abs(m[piv][col])) piv = r2;
                if (std::abs(m[piv][col]) < 1e-15) { singular = true; break; }
                for (int c2 = 0; c2 < 5; ++c2) std::swap(m[col][c2], m[piv][c2]);
                for (int r2 = 0; r2 < 4; ++r2) {
                    if (r2 == col) continue;
                    const double f = m[r2][col] / m[col][col];
                    for (int c2 = col; c2 < 5; ++c2) m[r2][c2] -= f * m[col][c2];
                }
            }
            if (singular) { lambda *= 10.0; continue; }
            std::array<double, 4> qn = q;
            for (int i = 0; i < 4; ++i) qn[i] += m[i][4] / m[i][i];
            clampq(qn);
            const double cn = cost(qn);
            if (cn < current) {
                q = qn;
                current = cn;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted || current < 1e-30) break;
    }
    return {q, current};
}

}  // namespace

FringeFit fit_fringe(const std::vector<ScanPoint>& scan, const FitPriors& priors,
                     const FitOptions& options) {
    if (scan.size() < 4) throw std::invalid_argument("fit_fringe: need at least 4 points");
    double xlo = scan[0].drive, xhi = scan[0].drive, ylo = scan[0].power, yhi = scan[0].power;
    for (const ScanPoint& s : scan) {
        xlo = std::min(xlo, s.drive);
        xhi = std::max(xhi, s.drive);
        ylo = std::min(ylo, s.power);
        yhi = std::max(yhi, s.power);
    }
    if (xhi - xlo < options.min_span)
        throw std::invalid_argument("fit_fringe: drive span below configured minimum");

    const std::array<double, 4> lo = {
        -1e9,
        priors.p_max_mean - FitPriors::kPMaxMult * priors.p_max_sigma,
        std::max(priors.p_min_mean - FitPriors::kPMinMult * priors.p_min_sigma, 0.0),
        priors.nu_mean - FitPriors::kNuMult * priors.nu_sigma,
    };
    const std::array<double, 4> hi = {
        1e9,
        priors.p_max_mean + FitPriors::kPMaxMult * priors.p_max_sigma,
        priors.p_min_mean + FitPriors::kPMinMult * priors.p_min_sigma,
        priors.nu_mean + FitPriors::kNuMult * priors.nu_sigma,
    };

    std::array<double, 4> best{};
    double best_cost = -1.0;
    const int starts = std::max(options.multistart_offsets, 1);
    for (int k = 0; k < starts; ++k) {
        const double d0 = -kPi + (2.0 * k + 1.0) * kPi / starts;
        std::array<double, 4> q0 = {d0, priors.p_max_mean, priors.p_min_mean, priors.nu_mean};
        auto [q, c] = lm_bounded(scan, q0, lo, hi, options.max_iterations);
        if (best_cost < 0.0 || c < best_cost) {
            best = q;
            best_cost = c;
        }
    }

    FringeFit fit;
    fit.offset = wrap_phase(best[0]);
    fit.p_max = best[1];
    fit.p_min = best[2];
    fit.nu = best[3];
    fit.residual_rms = std::sqrt(best_cost / static_cast<double>(scan.size()));
    const double amplitude = std::max(fit.p_max, 1e-12);
    const bool degenerate = (yhi - ylo) < 1e-9 * std::max(1.0, yhi);
    fit.ok = !degenerate && fit.residual_rms <= options.residual_rel_threshold * amplitude;
    return fit;
}

FitPriors characterize_priors(const std::function<double(double)>& sample_power,
                              int n_fringes, int points_per_fringe) {
    if (n_fringes < 1) throw std::invalid_argument("characterize_priors: need at least one fringe");
    if (points_per_fringe < 8)
        throw std::invalid_argument("characterize_priors: need at least 8 points per fringe");

    // wide-open priors for the dense characterisation fits
    std::vector<std::vector<ScanPoint>> scans(n_fringes);
    double peak = 0.0;
    for (int f = 0; f < n_fringes; ++f) {
        scans[f].resize(points_per_fringe);
        for (int k = 0; k < points_per_fringe; ++k) {
            const double x = 4.0 * kPi * k / points_per_fringe;  // two nominal periods
            scans[f][k] = {x, sample_power(x)};
            peak = std::max(peak, scans[f][k].power);
        }
    }
    peak = std::max(peak, 1e-9);
    FitPriors wide;
    wide.p_max_mean = peak;
    wide.p_max_sigma = peak / FitPriors::kPMaxMult;  // bounds [0, 2 peak]
    wide.p_min_mean = 0.5 * peak;
    wide.p_min_sigma = 0.25 * peak;                  // bounds [0, peak]
    wide.nu_mean = 1.0;
    wide.nu_sigma = 0.375;                           // bounds [0.25, 1.75]

    FitOptions opt;
    opt.residual_rel_threshold = 1e9;  // characterisation keeps every fit
    std::vector<double> pmax, pmin, nu;
    for (const auto& scan : scans) {
        const FringeFit f = fit_fringe(scan, wide, opt);
        pmax.push_back(f.p_max);
        pmin.push_back(f.p_min);
        nu.push_back(f.nu);
    }
    auto mean_sigma = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        return std::pair<double, double>(m, std::sqrt(s2 / static_cast<double>(v.size())));
    };
    FitPriors out;
    std::tie(out.p_max_mean, out.p_max_sigma) = mean_sigma(pmax);
    std::tie(out.p_min_mean, out.p_min_sigma) = mean_sigma(pmin);
    std::tie(out.nu_mean, out.nu_sigma) = mean_sigma(nu);
    return out;
}

std::vector<std::pair<int, int>> StabilisationPlan::all_pairs() const {
    std::vector<std::pair<int, int>> v = round1;
    v.insert(v.end(), round2.begin(), round2.end());
    return v;
}

StabilisationPlan build_plan(int d) {
    if (d < 2) throw std::invalid_argument("build_plan: d must be >= 2");
    StabilisationPlan plan;
    plan.d = d;
    for (int n = 0; n + 1 <= d - 1; n += 2) plan.round1.push_back({n, n + 1});
    if (d % 2 == 0) {
        for (int n = 1; n < d; n += 2) plan.round2.push_back({n, (n + 1) % d});
        if (d == 2) plan.round2.clear();  // the single pair already fixes Delta_{0,1}
    } else {
        for (int n = 1; n + 1 <= d - 3; n += 2) plan.round2.push_back({n, n + 1});
        if (d > 2) plan.round2.push_back({d - 1, 0});
    }
    // connectivity check: every mode reachable from the reference
    OffsetChains chains = build_chains(plan);
    if (static_cast<int>(chains.paths.size()) != d - 1)
        throw std::runtime_error("build_plan: pair graph not connected");
    return plan;
}

OffsetChains build_chains(const StabilisationPlan& plan) {
    OffsetChains chains;
    chains.edges = plan.all_pairs();
    const int d = plan.d;
    // adjacency with deterministic neighbour order (ascending mode)
    std::vector<std::vector<std::pair<int, int>>> adj(d);  // (neighbour, signed edge index+1)
    for (size_t e = 0; e < chains.edges.size(); ++e) {
        const auto [a, b] = chains.edges[e];
        adj[a].push_back({b, static_cast<int>(e) + 1});
        adj[b].push_back({a, -(static_cast<int>(e) + 1)});
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());

    std::vector<std::pair<int, int>> parent(d, {-1, 0});  // (parent mode, signed edge)
    std::vector<bool> seen(d, false);
    std::deque<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (const auto& [v, se] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            parent[v] = {u, se};
            queue.push_back(v);
        }
    }
    chains.paths.clear();
    for (int n = 1; n < d; ++n) {
        if (!seen[n]) continue;
        std::vector<std::pair<int, int>> path;
        int v = n;
        while (v != 0) {
            const auto [u, se] = parent[v];
            path.push_back({std::abs(se) - 1, se > 0 ? +1 : -1});
            v = u;
        }
        std::reverse(path.begin(), path.end());
        chains.paths.push_back(std::move(path));
    }
    return chains;
}

int OffsetChains::max_chain_length() const {
    size_t m = 0;
    for (const auto& p : paths) m = std::max(m, p.size());
    return static_cast<int>(m);
}

std::vector<double> infer_offsets(const std::vector<double>& round1_offsets,
                                  const std::vector<double>& round2_offsets,
                                  const StabilisationPlan& plan) {
    if (round1_offsets.size() != plan.round1.size() || round2_offsets.size() != plan.round2.size())
        throw std::invalid_argument("infer_offsets: missing pair measurement");
    std::vector<double> measured = round1_offsets;
    measured.insert(measured.end(), round2_offsets.begin(), round2_offsets.end());

    const OffsetChains chains = build_chains(plan);
    std::vector<double> out;
    out.reserve(plan.d - 1);
    for (const auto& path : chains.paths) {
        double delta = 0.0;
        for (const auto& [edge, sign] : path)
            delta = wrap_phase(delta + sign * measured[edge]);
        out.push_back(delta);
    }
    return out;
}

void apply_corrections(ChannelState& channel, const std::vector<double>& offsets) {
    if (static_cast<int>(offsets.size()) != channel.d - 1)
        throw std::invalid_argument("apply_corrections: need d-1 offsets");
    channel.corrections[0] = 0.0;
    for (int n = 1; n < channel.d; ++n) channel.corrections[n] = wrap_phase(-offsets[n - 1]);
}

double hadamard_fidelity(const ChannelState& channel) {
    cplx sum = 0.0;
    for (int n = 0; n < channel.d; ++n) sum += std::polar(1.0, channel.effective_phase(n));
    return std::norm(sum / static_cast<double>(channel.d));
}

namespace {

// bright-port power of the receiver MZI interfering modes (n, n') at drive x,
// with per-mode classical input power 1/2 and corrections bypassed
double pair_power(const ChannelState& ch, int n, int np, double x, double noise_rel, Rng& rng) {
    const double tn = ch.transmissivities[n] * ch.attenuation(n);
    const double tp = ch.transmissivities[np] * ch.attenuation(np);
    const double delta = ch.phases[np] - ch.phases[n];
    double p = 0.25 * (tn + tp) + 0.5 * std::sqrt(tn * tp) * std::cos(x + delta);
    if (noise_rel > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        p = std::max(0.0, p * (1.0 + noise_rel * gauss(rng)));
    }
    return p;
}

struct RoundMeasurement {
    std::vector<double> offsets;  // Delta_{n,n'} per pair
    bool ok = true;
};

RoundMeasurement measure_round(ChannelState& ch, const DriftModel& drift,
                               const std::vector<std::pair<int, int>>& pairs,
                               const TimingBudget& budget, const SessionOptions& opt,
                               const std::map<std::pair<int, int>, FitPriors>& priors,
                               Rng& drift_rng, Rng& noise_rng) {
    step_drift(ch, drift, budget.t_set_config_s, drift_rng);  // configure the round
    std::vector<std::vector<ScanPoint>> scans(pairs.size());
    for (int k = 0; k < opt.points_per_fringe; ++k) {
        const double x = (k - 0.5 * (opt.points_per_fringe - 1)) * opt.point_spacing_rad;
        step_drift(ch, drift, budget.t_set_config_s + budget.t_measure_point_s, drift_rng);
        for (size_t p = 0; p < pairs.size(); ++p)
            scans[p].push_back(
                {x, pair_power(ch, pairs[p].first, pairs[p].second, x, drift.readout_noise_rel,
                               noise_rng)});
    }
    step_drift(ch, drift, budget.t_fit_s, drift_rng);

    RoundMeasurement m;
    for (size_t p = 0; p < pairs.size(); ++p) {
        const FringeFit fit = fit_fringe(scans[p], priors.at(pairs[p]));
        if (!fit.ok) m.ok = false;
        m.offsets.push_back(wrap_phase(-fit.offset));
    }
    return m;
}

}  // namespace

SessionResult run_session(ChannelState channel, const DriftModel& drift,
                          const StabilisationPlan& plan, const TimingBudget& budget,
                          const SessionOptions& options, const QuantumCallback& callback) {
    channel.validate();
    drift.validate(channel.d);
    if (options.duration_s <= 0.0) throw std::invalid_argument("run_session: duration must be positive");

    Rng drift_rng = derive_rng(options.seed, "session-drift");
    Rng noise_rng = derive_rng(options.seed, "session-readout");
    Rng char_rng = derive_rng(options.seed, "session-characterise");
    Rng window_rng = derive_rng(options.seed, "session-window");

    // offline characterisation per pair configuration (does not advance time)
    std::map<std::pair<int, int>, FitPriors> priors;
    for (const auto& pr : plan.all_pairs()) {
        if (options.characterize && drift.readout_noise_rel > 0.0) {
            auto sampler = [&](double x) {
                return pair_power(channel, pr.first, pr.second, x, drift.readout_noise_rel, char_rng);
            };
            priors[pr] = characterize_priors(sampler, options.characterize_fringes,
                                             options.characterize_points);
        } else {
            FitPriors p;
            const double tn = channel.transmissivities[pr.first] * channel.attenuation(pr.first);
            const double tp = channel.transmissivities[pr.second] * channel.attenuation(pr.second);
            p.p_max_mean = std::sqrt(tn * tp);
            p.p_max_sigma = 0.0;
            p.p_min_mean = 0.25 * (std::sqrt(tn) - std::sqrt(tp)) * (std::sqrt(tn) - std::sqrt(tp));
            p.p_min_sigma = 0.0;
            p.nu_mean = 1.0;
            p.nu_sigma = 0.0;
            priors[pr] = p;
        }
    }

    const int n_rounds = plan.round2.empty() ? 1 : 2;
    SessionResult result;
    result.stab_iteration_s = budget.stab_iteration_s(n_rounds, options.points_per_fringe);
    result.duty_cycle = options.stabilise ? budget.duty_cycle(n_rounds, options.points_per_fringe) : 1.0;

    double last_correction_t = 0.0;
    double fid_sum = 0.0, fid_sq = 0.0;
    int windows = 0;

    std::uniform_real_distribution<double> uniform_phase(-kPi, std::nextafter(kPi, 4.0));
    while (channel.time_s < options.duration_s) {
        if (options.stabilise) {
            RoundMeasurement r1 =
                measure_round(channel, drift, plan.round1, budget, options, priors, drift_rng, noise_rng);
            if (!r1.ok)  // one rescan, then carry the previous correction forward
                r1 = measure_round(channel, drift, plan.round1, budget, options, priors, drift_rng,
                                   noise_rng);
            RoundMeasurement r2;
            if (!plan.round2.empty()) {
                r2 = measure_round(channel, drift, plan.round2, budget, options, priors, drift_rng,
                                   noise_rng);
                if (!r2.ok)
                    r2 = measure_round(channel, drift, plan.round2, budget, options, priors, drift_rng,
                                       noise_rng);
            }
            step_drift(channel, drift, budget.t_set_config_s, drift_rng);  // write corrections
            if (r1.ok && r2.ok) {
                apply_corrections(channel, infer_offsets(r1.offsets, r2.offsets, plan));
                last_correction_t = channel.time_s;
            }
            SessionRow row;
            row.t_s = channel.time_s;
            row.quantum = false;
            row.fidelity = hadamard_fidelity(channel);
            row.dt_since_correction = channel.time_s - last_correction_t;
            row.residual_phases = channel.residual_phases();
            result.rows.push_back(std::move(row));
        }

        // quantum acquisition window
        if (drift.uniform_phase_per_window)
            for (int n = 0; n < channel.d; ++n) channel.phases[n] = uniform_phase(window_rng);
        const double dt_sub = budget.t_quantum_window_s / options.window_substeps;
        double fid = 0.0;
        for (int s = 0; s < options.window_substeps; ++s) {
            step_drift(channel, drift, dt_sub, drift_rng);
            fid += hadamard_fidelity(channel);
            if (callback) callback(windows, channel.time_s, dt_sub, channel);
        }
        fid /= options.window_substeps;

        SessionRow row;
        row.t_s = channel.time_s;
        row.quantum = true;
        row.fidelity = fid;
        row.dt_since_correction = channel.time_s - last_correction_t;
        row.residual_phases = channel.residual_phases();
        result.rows.push_back(std::move(row));
        fid_sum += fid;
        fid_sq += fid * fid;
        ++windows;
    }

    if (windows > 0) {
        result.mean_quantum_fidelity = fid_sum / windows;
        result.quantum_fidelity_variance =
            std::max(0.0, fid_sq / windows - result.mean_quantum_fidelity * result.mean_quantum_fidelity);
    }
    return result;
}

std::vector<ScalingRow> error_scaling_study(const std::vector<int>& d_list,
                                            const std::vector<double>& epsilon_list,
                                            int trials, std::uint64_t master_seed) {
    if (trials < 1) throw std::invalid_argument("error_scaling_study: trials must be >= 1");
    if (d_list.empty() || epsilon_list.empty())
        throw std::invalid_argument("error_scaling_study: empty parameter lists");
    std::vector<ScalingRow> rows;
    for (int d : d_list) {
        const StabilisationPlan plan = build_plan(d);
        const OffsetChains chains = build_chains(plan);
        for (double eps : epsilon_list) {
            if (eps < 0.0) throw std::invalid_argument("error_scaling_study: negative epsilon");
            Rng rng = derive_rng(master_seed, "scaling", (static_cast<uint64_t>(d) << 32) ^
                                                             static_cast<uint64_t>(eps * 1e9));
            // mean absolute measurement error epsilon <-> normal sigma
            const double sigma = eps * std::sqrt(kPi / 2.0);
            std::normal_distribution<double> gauss(0.0, sigma);
            double sum = 0.0, sq = 0.0;
            std::vector<double> errs(chains.edges.size());
            for (int t = 0; t < trials; ++t) {
                for (double& e : errs) e = (sigma > 0.0) ? gauss(rng) : 0.0;
                cplx tot = 1.0;
                for (const auto& path : chains.paths) {
                    double delta = 0.0;
                    for (const auto& [edge, sign] : path) delta += sign * errs[edge];
                    tot += std::polar(1.0, delta);
                }
                const double f = std::norm(tot / static_cast<double>(d));
                sum += f;
                sq += f * f;
            }
            ScalingRow row;
            row.d = d;
            row.epsilon = eps;
            row.mean_fidelity = sum / trials;
            row.std_fidelity = std::sqrt(std::max(0.0, sq / trials - row.mean_fidelity * row.mean_fidelity));
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<double> fringe_spacing_study(const std::vector<double>& spacings_rad,
                                         double readout_noise_rel, int trials,
                                         const FitPriors& priors, std::uint64_t master_seed) {
    if (trials < 1) throw std::invalid_argument("fringe_spacing_study: trials must be >= 1");
    std::vector<double> out;
    out.reserve(spacings_rad.size());
    for (size_t si = 0; si < spacings_rad.size(); ++si) {
        const double spacing = spacings_rad[si];
        Rng rng = derive_rng(master_seed, "spacing-study", si);
        std::uniform_real_distribution<double> offset_dist(-kPi, std::nextafter(kPi, 4.0));
        std::normal_distribution<double> gauss(0.0, 1.0);
        double total = 0.0;
        std::vector<ScanPoint> scan(4);
        for (int t = 0; t < trials; ++t) {
            const double truth = offset_dist(rng);
            for (int k = 0; k < 4; ++k) {
                const double x = (k - 1.5) * spacing;
                const double u = 0.5 * (x - truth);
                double p = std::cos(u) * std::cos(u);
                p = std::max(0.0, p * (1.0 + readout_noise_rel * gauss(rng)));
                scan[k] = {x, p};
            }
            const FringeFit fit = fit_fringe(scan, priors);
            total += std::abs(wrap_phase(fit.offset - truth));
        }
        out.push_back(total / trials);
    }
    return out;
}

}  // namespace pathlink
