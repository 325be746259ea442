#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

Matrix dense(const tmc::SparseDtmc& d) {
    const std::size_t n = d.num_states();
    Matrix p(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& e : d.row(static_cast<tmc::StateIndex>(s))) p[s][e.column] += e.value;
    }
    return p;
}

namespace {

// Gaussian elimination with partial pivoting; a is overwritten.
std::vector<double> solve(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
        x[i] = acc / a[i][i];
    }
    return x;
}

}  // namespace

std::vector<double> until(const Matrix& p, const tmc::StateSet& phi1, const tmc::StateSet& phi2) {
    const std::size_t n = p.size();
    // Forward fixpoint: can reach phi2 through phi1.
    std::vector<bool> can(n);
    for (std::size_t s = 0; s < n; ++s) can[s] = phi2[s];
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (can[s] || !phi1[s]) continue;
            for (std::size_t t = 0; t < n; ++t) {
                if (p[s][t] > 0 && can[t]) {
                    can[s] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<std::size_t> unknown;
    std::vector<long> pos(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
        if (can[s] && !phi2[s]) {
            pos[s] = static_cast<long>(unknown.size());
            unknown.push_back(s);
        }
    }
    const std::size_t m = unknown.size();
    Matrix a(m, std::vector<double>(m, 0.0));
    std::vector<double> b(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t s = unknown[i];
        a[i][i] = 1.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (p[s][t] == 0.0) continue;
            if (phi2[t]) {
                b[i] += p[s][t];
            } else if (pos[t] >= 0) {
                a[i][static_cast<std::size_t>(pos[t])] -= p[s][t];
            }
        }
    }
    std::vector<double> y = m ? solve(a, b) : std::vector<double>{};
    std::vector<double> x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        if (phi2[s]) x[s] = 1.0;
        if (pos[s] >= 0) x[s] = y[static_cast<std::size_t>(pos[s])];
    }
    return x;
}

Matrix policy_matrix(const tmc::ExplicitMdp& mdp, const std::vector<std::size_t>& choice) {
    const std::size_t n = mdp.num_states();
    Matrix p(n, std::vector<double>(n, 0.0));
    for (tmc::StateIndex s = 0; s < n; ++s) {
        for (const auto& e : mdp.choice_row(mdp.choice_begin(s) + choice[s])) p[s][e.column] += e.value;
    }
    return p;
}

std::pair<std::vector<double>, std::vector<double>> enumerate_until(const tmc::ExplicitMdp& mdp,
                                                                    const tmc::StateSet& phi1,
                                                                    const tmc::StateSet& phi2) {
    const std::size_t n = mdp.num_states();
    std::vector<double> lo(n, 2.0), hi(n, -1.0);
    std::vector<std::size_t> choice(n, 0);
    for (;;) {
        std::vector<double> x = until(policy_matrix(mdp, choice), phi1, phi2);
        for (std::size_t s = 0; s < n; ++s) {
            lo[s] = std::min(lo[s], x[s]);
            hi[s] = std::max(hi[s], x[s]);
        }
        std::size_t s = 0;
        for (; s < n; ++s) {
            tmc::StateIndex si = static_cast<tmc::StateIndex>(s);
            if (++choice[s] < mdp.choice_end(si) - mdp.choice_begin(si)) break;
            choice[s] = 0;
        }
        if (s == n) break;
    }
    return {lo, hi};
}

namespace {

tmc::StateSpace make_space(std::size_t n, std::size_t n_actions, std::mt19937_64& rng) {
    tmc::FeatureSchema schema({"id", "turn"}, {{0, static_cast<std::int64_t>(n) - 1}, {1, 1}}, "turn");
    tmc::StateSpace space{schema, tmc::StateStore(2), {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<tmc::FeatureValue> v{static_cast<tmc::FeatureValue>(i), 1};
        space.states.intern(v);
    }
    std::bernoulli_distribution coin_a(0.5), coin_b(0.15);
    tmc::StateSet a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = coin_a(rng);
        b[i] = coin_b(rng);
    }
    space.labels["a"] = a;
    space.labels["b"] = b;
    for (std::size_t k = 0; k < n_actions; ++k) space.action_names.push_back("act" + std::to_string(k));
    return space;
}

std::vector<tmc::MatrixEntry> random_row(std::size_t n, std::size_t degree, std::mt19937_64& rng) {
    std::uniform_int_distribution<tmc::StateIndex> pick(0, static_cast<tmc::StateIndex>(n - 1));
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::vector<tmc::StateIndex> cols;
    while (cols.size() < degree) {
        tmc::StateIndex c = pick(rng);
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end());
    std::vector<double> ws(degree);
    double total = 0.0;
    for (double& x : ws) total += (x = w(rng));
    std::vector<tmc::MatrixEntry> row;
    double acc = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
        double v = i + 1 == degree ? 1.0 - acc : ws[i] / total;
        acc += v;
        row.push_back({cols[i], v});
    }
    return row;
}

}  // namespace

tmc::SparseDtmc random_dtmc(std::size_t n, std::mt19937_64& rng, std::size_t max_degree) {
    tmc::StateSpace space = make_space(n, 1, rng);
    std::uniform_int_distribution<std::size_t> deg(1, std::min(max_degree, n));
    std::bernoulli_distribution absorbing(0.1);
    std::vector<std::size_t> row_start{0};
    std::vector<tmc::MatrixEntry> entries;
    for (std::size_t s = 0; s < n; ++s) {
        if (absorbing(rng)) {
            entries.push_back({static_cast<tmc::StateIndex>(s), 1.0});
        } else {
            auto row = random_row(n, deg(rng), rng);
            entries.insert(entries.end(), row.begin(), row.end());
        }
        row_start.push_back(entries.size());
    }
    return tmc::SparseDtmc(std::move(space), 0, std::move(row_start), std::move(entries),
                           std::vector<tmc::ActionId>(n, 0));
}

tmc::ExplicitMdp random_mdp(std::size_t n, std::mt19937_64& rng, std::size_t max_actions, std::size_t max_degree) {
    tmc::StateSpace space = make_space(n, max_actions, rng);
    std::uniform_int_distribution<std::size_t> acts(1, max_actions);
    std::uniform_int_distribution<std::size_t> deg(1, std::min(max_degree, n));
    std::vector<std::size_t> choice_start{0}, row_start{0};
    std::vector<tmc::ActionId> choice_action;
    std::vector<tmc::MatrixEntry> entries;
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t k = acts(rng);
        for (std::size_t a = 0; a < k; ++a) {
            auto row = random_row(n, deg(rng), rng);
            entries.insert(entries.end(), row.begin(), row.end());
            row_start.push_back(entries.size());
            choice_action.push_back(static_cast<tmc::ActionId>(a));
        }
        choice_start.push_back(choice_action.size());
    }
    return tmc::ExplicitMdp(std::move(space), 0, std::move(choice_start), std::move(choice_action),
                            std::move(row_start), std::move(entries));
}

tmc::StateSet label(const tmc::SparseDtmc& d, const char* name) { return d.labels().at(name); }
tmc::StateSet label(const tmc::ExplicitMdp& m, const char* name) { return m.labels().at(name); }

}  // namespace oracle
