#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "matchcast/types.hpp"

namespace matchcast::forest {

struct Hyperparams {
    int n_trees = 500;
    int max_depth = 0;  // 0 = unlimited
    int min_leaf = 5;
    int mtry = 0;       // 0 = ceil(sqrt(n_features))
    bool bootstrap = true;
    int threads = 0;    // 0 = hardware concurrency; never changes the result

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    std::array<std::uint32_t, 3> counts{};  // training rows per class reaching this node

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& leaf_for(std::span<const double> x) const;
    // Class distribution of the leaf reached by x.
    OutcomeProbs predict_proba(std::span<const double> x) const;
    std::size_t leaf_count() const;
    int depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<Node> nodes_;
};

struct Forest {
    std::vector<DecisionTree> trees;
    int n_features = 0;
    std::uint64_t seed = 0;
    Hyperparams params;
    // Set when training saw a single class; every prediction is that class.
    std::optional<Outcome> degenerate;
    // Out-of-bag accuracy; absent without bootstrap or when no row is out of bag.
    std::optional<double> oob_accuracy;

    OutcomeProbs predict_proba(std::span<const double> x) const;
    Outcome predict(std::span<const double> x) const;

    friend bool operator==(const Forest&, const Forest&) = default;
};

// Fits a forest on rows x[i] with labels y[i]. Rows are put in a canonical
// order first, so the result does not depend on input order. Tree t draws
// from an RNG stream keyed by (seed, t).
Forest train(std::span<const std::vector<double>> x, std::span<const Outcome> y, const Hyperparams& params,
             std::uint64_t seed);

nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

// splitmix64 generator; portable so seeded results match across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    double uniform();  // [0, 1)

private:
    std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace matchcast::forest
