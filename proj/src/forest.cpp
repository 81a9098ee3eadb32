#include "matchcast/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "matchcast/errors.hpp"

namespace matchcast::forest {

std::uint64_t Rng::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % bound;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    r.next();
    return r.next();
}

const Node& DecisionTree::leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const Node& n = nodes_[i];
        i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i];
}

OutcomeProbs DecisionTree::predict_proba(std::span<const double> x) const {
    const auto& c = leaf_for(x).counts;
    const double total = static_cast<double>(c[0]) + c[1] + c[2];
    return {c[0] / total, c[1] / total, c[2] / total};
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes_[i].is_leaf()) {
            d[nodes_[i].left] = d[i] + 1;
            d[nodes_[i].right] = d[i] + 1;
        }
    }
    return best;
}

OutcomeProbs Forest::predict_proba(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features) {
        throw ModelError("feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                         std::to_string(n_features));
    }
    if (degenerate) {
        OutcomeProbs p{0, 0, 0};
        (*degenerate == Outcome::homewin ? p.home : *degenerate == Outcome::draw ? p.draw : p.away) = 1.0;
        return p;
    }
    double h = 0, d = 0, a = 0;
    for (const auto& t : trees) {
        const auto p = t.predict_proba(x);
        h += p.home;
        d += p.draw;
        a += p.away;
    }
    return OutcomeProbs::normalized(h, d, a);
}

Outcome Forest::predict(std::span<const double> x) const { return predict_proba(x).argmax(); }

namespace {

struct TreeBuilder {
    std::span<const std::vector<double>> x;
    std::span<const Outcome> y;
    const Hyperparams& params;
    int mtry;
    Rng rng;

    std::vector<Node> nodes;
    std::vector<std::pair<double, int>> scratch;

    static double impurity(const std::array<std::uint32_t, 3>& c, double n) {
        if (n <= 0) return 0;
        return n - (double(c[0]) * c[0] + double(c[1]) * c[1] + double(c[2]) * c[2]) / n;
    }

    int build(std::vector<int>& rows, int depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        std::array<std::uint32_t, 3> counts{};
        for (int r : rows) ++counts[index_of(y[r])];
        nodes[id].counts = counts;

        const int n = static_cast<int>(rows.size());
        const bool pure = std::count(counts.begin(), counts.end(), 0u) >= 2;
        if (pure || n < 2 * params.min_leaf || (params.max_depth > 0 && depth >= params.max_depth)) return id;

        const int d = static_cast<int>(x[0].size());
        // Lazy Fisher-Yates over feature indices; keep drawing past constant
        // features until mtry informative ones were examined.
        std::vector<int> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        int evaluated = 0;
        int best_feature = -1;
        double best_threshold = 0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<int> candidates;
        for (int k = 0; k < d && evaluated < mtry; ++k) {
            const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - k)));
            std::swap(perm[k], perm[j]);
            const int f = perm[k];
            const double first = x[rows[0]][f];
            bool constant = true;
            for (int r : rows) {
                if (x[r][f] != first) {
                    constant = false;
                    break;
                }
            }
            if (constant) continue;
            ++evaluated;
            candidates.push_back(f);
        }
        // Lowest feature index wins ties.
        std::sort(candidates.begin(), candidates.end());
        for (int f : candidates) {
            scratch.clear();
            for (int r : rows) scratch.emplace_back(x[r][f], static_cast<int>(index_of(y[r])));
            std::sort(scratch.begin(), scratch.end());
            std::array<std::uint32_t, 3> left{};
            for (int i = 0; i + 1 < n; ++i) {
                ++left[scratch[i].second];
                if (scratch[i].first == scratch[i + 1].first) continue;
                const int nl = i + 1, nr = n - nl;
                if (nl < params.min_leaf || nr < params.min_leaf) continue;
                const std::array<std::uint32_t, 3> right{counts[0] - left[0], counts[1] - left[1],
                                                         counts[2] - left[2]};
                const double score = impurity(left, nl) + impurity(right, nr);
                // Strict improvement keeps the lowest threshold among ties.
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = scratch[i].first + (scratch[i + 1].first - scratch[i].first) / 2;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<int> lrows, rrows;
        for (int r : rows) (x[r][best_feature] <= best_threshold ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(lrows, depth + 1);
        const int rt = build(rrows, depth + 1);
        nodes[id].feature = best_feature;
        nodes[id].threshold = best_threshold;
        nodes[id].left = l;
        nodes[id].right = rt;
        return id;
    }
};

}  // namespace

Forest train(std::span<const std::vector<double>> x_in, std::span<const Outcome> y_in, const Hyperparams& params,
             std::uint64_t seed) {
    if (x_in.size() != y_in.size()) throw ModelError("feature and label counts differ");
    if (x_in.size() < 2) throw ModelError("a forest needs at least two training rows");
    if (params.n_trees < 1) throw ConfigError("n_trees must be positive");
    if (params.min_leaf < 1) throw ConfigError("min_leaf must be positive");
    if (params.max_depth < 0 || params.mtry < 0) throw ConfigError("max_depth and mtry must be non-negative");
    const std::size_t d = x_in[0].size();
    if (d == 0) throw ModelError("feature vectors are empty");
    for (const auto& row : x_in) {
        if (row.size() != d) throw ModelError("feature vectors differ in length");
    }

    Forest forest;
    forest.n_features = static_cast<int>(d);
    forest.seed = seed;
    forest.params = params;
    forest.params.threads = 0;  // execution setting, not part of the model

    const Outcome first = y_in[0];
    if (std::all_of(y_in.begin(), y_in.end(), [&](Outcome o) { return o == first; })) {
        forest.degenerate = first;
        return forest;
    }

    // Canonical row order: lexicographic by features, then label.
    std::vector<std::size_t> order(x_in.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x_in[a] != x_in[b]) return x_in[a] < x_in[b];
        return y_in[a] < y_in[b];
    });
    std::vector<std::vector<double>> x;
    std::vector<Outcome> y;
    x.reserve(order.size());
    for (std::size_t i : order) {
        x.push_back(x_in[i]);
        y.push_back(y_in[i]);
    }

    const int n = static_cast<int>(x.size());
    const int mtry = params.mtry > 0 ? std::min<int>(params.mtry, static_cast<int>(d))
                                     : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    forest.trees.resize(params.n_trees);
    std::vector<std::vector<int>> in_bag(params.n_trees);

    auto grow = [&](int t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows(n);
        std::vector<int> bag(n, 0);
        for (int i = 0; i < n; ++i) {
            rows[i] = params.bootstrap ? static_cast<int>(rng.below(static_cast<std::uint64_t>(n))) : i;
            ++bag[rows[i]];
        }
        std::sort(rows.begin(), rows.end());
        TreeBuilder b{x, y, params, mtry, rng, {}, {}};
        b.build(rows, 0);
        forest.trees[t] = DecisionTree(std::move(b.nodes));
        in_bag[t] = std::move(bag);
    };

    unsigned workers = params.threads > 0 ? static_cast<unsigned>(params.threads) : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(params.n_trees));
    if (workers == 1) {
        for (int t = 0; t < params.n_trees; ++t) grow(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next++; t < params.n_trees; t = next++) grow(t);
            });
        }
        for (auto& th : pool) th.join();
    }

    if (params.bootstrap) {
        int scored = 0, correct = 0;
        for (int i = 0; i < n; ++i) {
            double h = 0, dr = 0, a = 0;
            int votes = 0;
            for (int t = 0; t < params.n_trees; ++t) {
                if (in_bag[t][i] > 0) continue;
                const auto p = forest.trees[t].predict_proba(x[i]);
                h += p.home;
                dr += p.draw;
                a += p.away;
                ++votes;
            }
            if (votes == 0) continue;
            ++scored;
            correct += OutcomeProbs::normalized(h, dr, a).argmax() == y[i];
        }
        if (scored > 0) forest.oob_accuracy = static_cast<double>(correct) / scored;
    }
    return forest;
}

nlohmann::json to_json(const Forest& f) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes()) {
            if (n.is_leaf()) {
                nodes.push_back({{"c", n.counts}});
            } else {
                nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"c", n.counts}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    nlohmann::json j = {{"type", "random_forest"},
                        {"version", 1},
                        {"n_features", f.n_features},
                        {"seed", f.seed},
                        {"hyperparams",
                         {{"n_trees", f.params.n_trees},
                          {"max_depth", f.params.max_depth},
                          {"min_leaf", f.params.min_leaf},
                          {"mtry", f.params.mtry},
                          {"bootstrap", f.params.bootstrap}}},
                        {"degenerate", nullptr},
                        {"oob_accuracy", nullptr},
                        {"trees", std::move(trees)}};
    if (f.degenerate) j["degenerate"] = std::string(to_string(*f.degenerate));
    if (f.oob_accuracy) j["oob_accuracy"] = *f.oob_accuracy;
    return j;
}

Forest forest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "random_forest") throw ModelError("artifact is not a random_forest");
        if (j.at("version").get<int>() != 1) throw ModelError("unsupported random_forest artifact version");
        Forest f;
        f.n_features = j.at("n_features").get<int>();
        f.seed = j.at("seed").get<std::uint64_t>();
        const auto& hp = j.at("hyperparams");
        f.params.n_trees = hp.at("n_trees").get<int>();
        f.params.max_depth = hp.at("max_depth").get<int>();
        f.params.min_leaf = hp.at("min_leaf").get<int>();
        f.params.mtry = hp.at("mtry").get<int>();
        f.params.bootstrap = hp.at("bootstrap").get<bool>();
        if (!j.at("degenerate").is_null()) f.degenerate = outcome_from_string(j.at("degenerate").get<std::string>());
        if (!j.at("oob_accuracy").is_null()) f.oob_accuracy = j.at("oob_accuracy").get<double>();
        for (const auto& jt : j.at("trees")) {
            std::vector<Node> nodes;
            for (const auto& jn : jt) {
                Node n;
                n.counts = jn.at("c").get<std::array<std::uint32_t, 3>>();
                if (jn.contains("f")) {
                    n.feature = jn.at("f").get<int>();
                    n.threshold = jn.at("t").get<double>();
                    n.left = jn.at("l").get<int>();
                    n.right = jn.at("r").get<int>();
                    if (n.feature >= f.n_features || n.left <= 0 || n.right <= 0 ||
                        n.left >= static_cast<int>(jt.size()) || n.right >= static_cast<int>(jt.size())) {
                        throw ModelError("random_forest artifact has an invalid node");
                    }
                }
                nodes.push_back(n);
            }
            if (nodes.empty()) throw ModelError("random_forest artifact has an empty tree");
            f.trees.emplace_back(std::move(nodes));
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed random_forest artifact: ") + e.what());
    }
}

}  // namespace matchcast::forest
