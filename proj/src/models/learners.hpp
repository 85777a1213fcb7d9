#pragma once

#include <memory>

#include "tabml/models.hpp"

namespace tabml::learners {

std::unique_ptr<Classifier> make_naive_bayes();
std::unique_ptr<Classifier> make_logistic_regression();
std::unique_ptr<Classifier> make_decision_tree();
std::unique_ptr<Classifier> make_random_forest();
std::unique_ptr<Classifier> make_gradient_boosting();
std::unique_ptr<Classifier> make_knn();
std::unique_ptr<Classifier> make_svm();
std::unique_ptr<Classifier> make_genetic_programming();
std::unique_ptr<Classifier> make_lcs();

/// Stratified assignment of rows to `k` folds; used for internal splits.
std::vector<int> stratified_folds(std::span<const int> y, int k, Rng& rng);

}  // namespace tabml::learners
