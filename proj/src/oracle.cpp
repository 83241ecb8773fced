// SPDX-License-Identifier: Apache-2.0

#include "collapsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "collapsim/errors.hpp"
#include "collapsim/kernels.hpp"

namespace collapsim {

namespace {

constexpr std::uint64_t kCompositionGuard = 200000;
constexpr std::size_t kMatrixByteGuard = std::size_t{1} << 30;
constexpr double kRowSumTol = 1e-10;
constexpr double kResidualTol = 1e-9;

}  // namespace

std::string CountComposition::label() const {
    std::string out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i > 0) out += '|';
        out += std::to_string(counts[i]);
    }
    return out;
}

std::uint64_t composition_count(std::uint32_t n, std::size_t k) {
    // C(n + k - 1, k - 1) with saturation
    std::uint64_t result = 1;
    const std::uint64_t kk = k - 1;
    for (std::uint64_t i = 1; i <= kk; ++i) {
        const long double next =
            static_cast<long double>(result) * static_cast<long double>(n + i) / i;
        if (next > static_cast<long double>(std::numeric_limits<std::int64_t>::max()))
            return std::numeric_limits<std::int64_t>::max();
        result = static_cast<std::uint64_t>(next + 0.5L);
    }
    return result;
}

std::vector<CountComposition> enumerate_compositions(std::uint32_t n, std::size_t k) {
    std::vector<CountComposition> out;
    std::vector<std::uint32_t> counts(k, 0);
    // first coordinate descending, recursively
    auto rec = [&](auto&& self, std::uint32_t remaining, std::size_t pos) -> void {
        if (pos + 1 == k) {
            counts[pos] = remaining;
            out.push_back(CountComposition{counts});
            return;
        }
        for (std::uint32_t c = remaining;; --c) {
            counts[pos] = c;
            self(self, remaining - c, pos + 1);
            if (c == 0) break;
        }
    };
    rec(rec, n, 0);
    return out;
}

OracleChain::OracleChain(std::vector<CountComposition> states, std::vector<double> transition,
                         std::uint32_t batch_size, double fresh_prob, ProbVector source_law)
    : states_(std::move(states)),
      transition_(std::move(transition)),
      batch_size_(batch_size),
      fresh_prob_(fresh_prob),
      source_law_(std::move(source_law)) {
    const std::size_t m = states_.size();
    if (transition_.size() != m * m)
        throw invalid_argument_error("OracleChain: transition matrix shape mismatch");
    absorbing_flag_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = row(i);
        double total = 0.0;
        for (double p : r) {
            if (!(p >= 0.0))
                throw numerical_error("OracleChain: negative transition probability in row " +
                                      std::to_string(i));
            total += p;
        }
        if (std::abs(total - 1.0) > kRowSumTol)
            throw numerical_error("OracleChain: row " + std::to_string(i) + " sums to " +
                                  std::to_string(total));
        if (r[i] == 1.0) {
            absorbing_flag_[i] = 1;
            absorbing_.push_back(i);
        }
        index_[states_[i].counts] = i;
    }
}

std::size_t OracleChain::index_of(const CountComposition& c) const {
    auto it = index_.find(c.counts);
    if (it == index_.end())
        throw invalid_argument_error("OracleChain: state " + c.label() + " not in chain");
    return it->second;
}

double OracleChain::state_value(std::size_t i, const TestFunction& f) const {
    const auto& counts = states_[i].counts;
    double acc = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j)
        acc += static_cast<double>(counts[j]) * f[j];
    return acc / static_cast<double>(batch_size_);
}

OracleChain build_chain(std::uint32_t batch_size, const Support& s, double fresh_prob,
                        const ProbVector& mu0) {
    if (batch_size < 1) throw invalid_argument_error("build_chain: N must be >= 1");
    if (!(fresh_prob >= 0.0 && fresh_prob <= 1.0))
        throw invalid_argument_error("build_chain: a must lie in [0, 1]");
    if (mu0.size() != s.size())
        throw invalid_argument_error("build_chain: mu0 size does not match support");

    const std::size_t k = s.size();
    const std::uint64_t m64 = composition_count(batch_size, k);
    if (m64 > kCompositionGuard)
        throw resource_limit_error("build_chain: " + std::to_string(m64) +
                                   " compositions exceed the guard of " +
                                   std::to_string(kCompositionGuard));
    const std::size_t m = static_cast<std::size_t>(m64);
    if (m * m * sizeof(double) > kMatrixByteGuard)
        throw resource_limit_error("build_chain: dense transition matrix would need " +
                                   std::to_string(m * m * sizeof(double)) + " bytes");

    auto states = enumerate_compositions(batch_size, k);

    // log-factorials 0..N
    std::vector<double> log_fact(batch_size + 1, 0.0);
    for (std::uint32_t i = 2; i <= batch_size; ++i)
        log_fact[i] = log_fact[i - 1] + std::log(static_cast<double>(i));

    const double n_inv = 1.0 / static_cast<double>(batch_size);
    std::vector<double> transition(m * m, 0.0);
    std::vector<double> p(k), logp(k), freq(k);

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            freq[j] = static_cast<double>(states[i].counts[j]) * n_inv;
        kern::weighted_sum2(fresh_prob, mu0.weights(), 1.0 - fresh_prob, freq, p);
        for (std::size_t j = 0; j < k; ++j) logp[j] = p[j] > 0.0 ? std::log(p[j]) : 0.0;

        double* out = transition.data() + i * m;
        for (std::size_t t = 0; t < m; ++t) {
            const auto& y = states[t].counts;
            double lp = log_fact[batch_size];
            bool possible = true;
            for (std::size_t j = 0; j < k; ++j) {
                if (y[j] == 0) continue;
                if (p[j] == 0.0) {
                    possible = false;
                    break;
                }
                lp += static_cast<double>(y[j]) * logp[j] - log_fact[y[j]];
            }
            out[t] = possible ? std::exp(lp) : 0.0;
        }
    }
    return OracleChain(std::move(states), std::move(transition), batch_size, fresh_prob, mu0);
}

DenseLu::DenseLu(std::vector<double> a, std::size_t n) : lu_(std::move(a)), perm_(n), n_(n) {
    if (lu_.size() != n * n) throw invalid_argument_error("DenseLu: matrix shape mismatch");
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(lu_[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(lu_[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (!(best > 1e-300))
            throw numerical_error("DenseLu: singular system (pivot " + std::to_string(best) +
                                  " at column " + std::to_string(col) + ")");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(lu_[pivot * n + j], lu_[col * n + j]);
            std::swap(perm_[pivot], perm_[col]);
        }
        const double inv = 1.0 / lu_[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = lu_[r * n + col] * inv;
            lu_[r * n + col] = factor;
            if (factor != 0.0)
                kern::axpy(-factor, {lu_.data() + col * n + col + 1, n - col - 1},
                           {lu_.data() + r * n + col + 1, n - col - 1});
        }
    }
}

void DenseLu::solve(std::span<double> b) const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 1; i < n_; ++i) {
        double acc = x[i];
        for (std::size_t j = 0; j < i; ++j) acc -= lu_[i * n_ + j] * x[j];
        x[i] = acc;
    }
    for (std::size_t ii = n_; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < n_; ++j) acc -= lu_[ii * n_ + j] * x[j];
        x[ii] = acc / lu_[ii * n_ + ii];
    }
    std::copy(x.begin(), x.end(), b.begin());
}

namespace {

// I - Q over the transient states, plus the transient/absorbing index maps.
struct TransientSystem {
    std::vector<std::size_t> transient;
    std::vector<double> i_minus_q;  // row-major
};

TransientSystem transient_system(const OracleChain& chain) {
    TransientSystem sys;
    for (std::size_t i = 0; i < chain.size(); ++i)
        if (!chain.is_absorbing(i)) sys.transient.push_back(i);
    const std::size_t m = sys.transient.size();
    sys.i_minus_q.assign(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const auto row = chain.row(sys.transient[r]);
        for (std::size_t c = 0; c < m; ++c)
            sys.i_minus_q[r * m + c] = (r == c ? 1.0 : 0.0) - row[sys.transient[c]];
    }
    return sys;
}

void check_residual(const std::vector<double>& a, std::size_t n, std::span<const double> x,
                    std::span<const double> b, const char* what) {
    double worst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double ax = kern::dot({a.data() + r * n, n}, x);
        worst = std::max(worst, std::abs(ax - b[r]));
    }
    if (worst > kResidualTol)
        throw numerical_error(std::string(what) + ": residual " + std::to_string(worst) +
                              " exceeds " + std::to_string(kResidualTol));
}

// Iterative Tarjan over edges with strictly positive probability.
std::vector<std::vector<std::size_t>> strongly_connected_components(const OracleChain& chain) {
    const std::size_t n = chain.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> sccs;
    int next_index = 0;

    struct Frame {
        std::size_t v;
        std::size_t next_child;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& fr = frames.back();
            const auto row = chain.row(fr.v);
            bool descended = false;
            while (fr.next_child < n) {
                const std::size_t w = fr.next_child++;
                if (row[w] <= 0.0) continue;
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back(Frame{w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[fr.v] = std::min(low[fr.v], index[w]);
            }
            if (descended) continue;
            if (low[fr.v] == index[fr.v]) {
                std::vector<std::size_t> comp;
                for (;;) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                    if (w == fr.v) break;
                }
                std::sort(comp.begin(), comp.end());
                sccs.push_back(std::move(comp));
            }
            const std::size_t v = fr.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        }
    }
    return sccs;
}

}  // namespace

AbsorptionProbs absorption_probs(const OracleChain& chain) {
    if (chain.absorbing().empty())
        throw precondition_error("absorption_probs: chain has no absorbing states");

    const auto sys = transient_system(chain);
    const std::size_t m = sys.transient.size();
    const auto& abs = chain.absorbing();

    AbsorptionProbs out;
    out.absorbing = abs;
    out.n_states = chain.size();
    out.probs.assign(chain.size() * abs.size(), 0.0);
    for (std::size_t a = 0; a < abs.size(); ++a)
        out.probs[abs[a] * abs.size() + a] = 1.0;

    if (m > 0) {
        DenseLu lu(sys.i_minus_q, m);
        std::vector<double> col(m);
        for (std::size_t a = 0; a < abs.size(); ++a) {
            std::vector<double> rhs(m);
            for (std::size_t r = 0; r < m; ++r) rhs[r] = chain.row(sys.transient[r])[abs[a]];
            col = rhs;
            lu.solve(col);
            check_residual(sys.i_minus_q, m, col, rhs, "absorption_probs");
            for (std::size_t r = 0; r < m; ++r)
                out.probs[sys.transient[r] * abs.size() + a] = col[r];
        }
    }

    for (std::size_t i = 0; i < chain.size(); ++i) {
        double total = 0.0;
        for (double p : out.row(i)) total += p;
        if (std::abs(total - 1.0) > kResidualTol)
            throw numerical_error("absorption_probs: row " + std::to_string(i) + " sums to " +
                                  std::to_string(total));
    }
    return out;
}

std::vector<double> absorption_times(const OracleChain& chain) {
    if (chain.absorbing().empty())
        throw precondition_error("absorption_times: chain has no absorbing states");

    const auto sys = transient_system(chain);
    const std::size_t m = sys.transient.size();
    std::vector<double> times(chain.size(), 0.0);
    if (m == 0) return times;

    DenseLu lu(sys.i_minus_q, m);
    std::vector<double> t(m, 1.0);
    const std::vector<double> ones(m, 1.0);
    lu.solve(t);
    check_residual(sys.i_minus_q, m, t, ones, "absorption_times");
    for (std::size_t r = 0; r < m; ++r) times[sys.transient[r]] = t[r];
    return times;
}

StationaryResult stationary_distribution(const OracleChain& chain) {
    if (!(chain.fresh_prob() > 0.0))
        throw precondition_error(
            "stationary_distribution: requires a > 0 (the a = 0 chain is absorbing; use the "
            "absorption solvers)");

    const auto sccs = strongly_connected_components(chain);
    StationaryResult result;

    for (const auto& comp : sccs) {
        // closed iff no probability leaves the component
        std::vector<char> member(chain.size(), 0);
        for (std::size_t v : comp) member[v] = 1;
        bool closed = true;
        for (std::size_t v : comp) {
            const auto row = chain.row(v);
            for (std::size_t w = 0; w < chain.size() && closed; ++w)
                if (row[w] > 0.0 && !member[w]) closed = false;
            if (!closed) break;
        }
        if (closed) result.closed_classes.push_back(comp);
    }
    result.unique = result.closed_classes.size() == 1;

    const std::size_t k = chain.source_law().size();
    for (const auto& comp : result.closed_classes) {
        const std::size_t m = comp.size();
        // balance equations (P^T - I) pi = 0 with the last row replaced by
        // the normalization sum(pi) = 1
        std::vector<double> a(m * m, 0.0);
        for (std::size_t r = 0; r + 1 < m; ++r)
            for (std::size_t c = 0; c < m; ++c)
                a[r * m + c] = chain.row(comp[c])[comp[r]] - (r == c ? 1.0 : 0.0);
        for (std::size_t c = 0; c < m; ++c) a[(m - 1) * m + c] = 1.0;

        std::vector<double> pi(m, 0.0);
        pi[m - 1] = 1.0;
        const std::vector<double> rhs = pi;
        DenseLu lu(a, m);
        lu.solve(pi);
        check_residual(a, m, pi, rhs, "stationary_distribution");

        double total = 0.0;
        for (double& v : pi) {
            if (v < 0.0) {
                if (v < -1e-9)
                    throw numerical_error("stationary_distribution: negative mass " +
                                          std::to_string(v));
                v = 0.0;
            }
            total += v;
        }
        std::vector<double> full(chain.size(), 0.0);
        std::vector<double> bary(k, 0.0);
        const double n_inv = 1.0 / static_cast<double>(chain.batch_size());
        for (std::size_t idx = 0; idx < m; ++idx) {
            const double w = pi[idx] / total;
            full[comp[idx]] = w;
            const auto& counts = chain.states()[comp[idx]].counts;
            for (std::size_t j = 0; j < k; ++j)
                bary[j] += w * static_cast<double>(counts[j]) * n_inv;
        }
        result.distributions.push_back(std::move(full));
        result.barycenters.push_back(ProbVector(bary));
    }
    return result;
}

std::vector<double> exact_mean_trajectory(const OracleChain& chain, std::size_t start,
                                          const TestFunction& f, std::uint32_t horizon) {
    if (start >= chain.size())
        throw invalid_argument_error("exact_mean_trajectory: start state out of range");
    const std::size_t m = chain.size();
    std::vector<double> phi(m);
    for (std::size_t i = 0; i < m; ++i) phi[i] = chain.state_value(i, f);

    std::vector<double> rho(m, 0.0), next(m);
    rho[start] = 1.0;
    std::vector<double> out;
    out.reserve(horizon + 1);
    out.push_back(phi[start]);
    for (std::uint32_t n = 1; n <= horizon; ++n) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (rho[i] != 0.0) kern::axpy(rho[i], chain.row(i), next);
        rho.swap(next);
        out.push_back(kern::dot(rho, phi));
    }
    return out;
}

std::vector<double> exact_mean_trajectory(const ExperimentConfig& cfg, const TestFunction& f,
                                          std::uint32_t horizon) {
    // chain-power route when the b = 0 chain is buildable and mu0 sits on the
    // count grid
    if (cfg.parametric_weight == 0.0 &&
        composition_count(cfg.batch_size, cfg.support.size()) <= kCompositionGuard) {
        std::vector<std::uint32_t> counts(cfg.support.size());
        std::uint64_t total = 0;
        bool on_grid = true;
        for (std::size_t j = 0; j < cfg.support.size(); ++j) {
            const double scaled = cfg.source_law[j] * static_cast<double>(cfg.batch_size);
            const double rounded = std::round(scaled);
            if (std::abs(scaled - rounded) > 1e-9 * static_cast<double>(cfg.batch_size)) {
                on_grid = false;
                break;
            }
            counts[j] = static_cast<std::uint32_t>(rounded);
            total += counts[j];
        }
        if (on_grid && total == cfg.batch_size) {
            const auto chain =
                build_chain(cfg.batch_size, cfg.support, cfg.fresh_prob, cfg.source_law);
            return exact_mean_trajectory(chain, chain.index_of(CountComposition{counts}), f,
                                         horizon);
        }
    }

    // iterated affine recursion (deliberately not the closed form used by
    // diagnostics, so the two can cross-check)
    const double u = integrate(cfg.source_law, f);
    double m = cfg.parametric_weight * integrate(cfg.theta_init, f) +
               cfg.empirical_weight * integrate(cfg.source_law, f);
    std::vector<double> out;
    out.reserve(horizon + 1);
    out.push_back(m);
    for (std::uint32_t n = 1; n <= horizon; ++n) {
        m = cfg.fresh_prob * u + (1.0 - cfg.fresh_prob) * m;
        out.push_back(m);
    }
    return out;
}

}  // namespace collapsim
