#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "deflect/error.hpp"
#include "deflect/metrics.hpp"
#include "deflect/synth.hpp"
#include "oracles.hpp"

using namespace deflect;

namespace {

const std::vector<std::string> kClasses{"crater", "defect_free", "dirt"};
const std::set<std::string> kDefects{"crater", "dirt"};

PosteriorVector make_posterior(std::vector<double> p) {
    PosteriorVector out;
    out.probabilities = std::move(p);
    out.predicted = std::max_element(out.probabilities.begin(), out.probabilities.end()) - out.probabilities.begin();
    out.entropy = shannon_entropy(out.probabilities);
    return out;
}

std::vector<std::string> labels_with_counts(const std::vector<std::pair<std::string, int>>& counts) {
    std::vector<std::string> out;
    for (const auto& [label, n] : counts) out.insert(out.end(), n, label);
    return out;
}

}  // namespace

TEST_CASE("merging defect classes") {
    // (defect_free, crater, dirt) = (0.6, 0.3, 0.1), in sorted class order.
    const BinaryPosterior b = merge_defect_classes(make_posterior({0.3, 0.6, 0.1}), kClasses, kDefects);
    CHECK(b.p_defect == doctest::Approx(0.4));
    CHECK(b.p_defect_free == doctest::Approx(0.6));
    CHECK_FALSE(b.predicted_defect);

    const BinaryPosterior u = merge_defect_classes(make_posterior({1 / 3.0, 1 / 3.0, 1 / 3.0}), kClasses, kDefects);
    CHECK(u.p_defect == doctest::Approx(2 / 3.0));
    CHECK(u.p_defect_free == doctest::Approx(1 / 3.0));
    CHECK(u.predicted_defect);

    CHECK_THROWS_AS(merge_defect_classes(make_posterior({0.3, 0.6, 0.1}), kClasses, {}), UsageError);
    CHECK_THROWS_AS(merge_defect_classes(make_posterior({0.3, 0.6, 0.1}), kClasses, {"rust"}), UsageError);
    CHECK_THROWS_AS(
        merge_defect_classes(make_posterior({0.3, 0.6, 0.1}), kClasses, {"crater", "dirt", "defect_free"}),
        UsageError);

    const BinaryPosterior o = one_against_all(make_posterior({0.3, 0.6, 0.1}), kClasses, "dirt");
    CHECK(o.p_defect == doctest::Approx(0.1));
}

TEST_CASE("merged MER never exceeds 3-class MER") {
    std::mt19937_64 rng(2);
    std::gamma_distribution<double> gam(0.3);
    std::uniform_int_distribution<int> lab(0, 2);
    int wrong3 = 0, wrong2 = 0;
    for (int i = 0; i < 500; ++i) {
        std::vector<double> p(3);
        double s = 0.0;
        for (double& v : p) s += (v = gam(rng) + 1e-12);
        for (double& v : p) v /= s;
        const PosteriorVector post = make_posterior(p);
        const int truth = lab(rng);
        wrong3 += static_cast<int>(post.predicted) != truth;
        const bool defect = kClasses[truth] != "defect_free";
        wrong2 += merge_defect_classes(post, kClasses, kDefects).predicted_defect != defect;
    }
    CHECK(wrong2 <= wrong3);
}

TEST_CASE("probability metrics") {
    const std::vector<char> truth{1, 0};
    const std::vector<double> p{0.9, 0.2};
    const BinaryRates r = probability_metrics(truth, p);
    CHECK(*r.mer == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(*r.fnr == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(*r.fpr == doctest::Approx(0.2).epsilon(1e-15));

    const BinaryRates exact = probability_metrics(std::vector<char>{1, 0, 1}, std::vector<double>{1.0, 0.0, 1.0});
    CHECK(*exact.mer == 0.0);
    CHECK(*exact.fpr == 0.0);
    CHECK(*exact.fnr == 0.0);

    const BinaryRates half = probability_metrics(std::vector<char>{1, 0, 0}, std::vector<double>{0.5, 0.5, 0.5});
    CHECK(*half.mer == 0.5);
    CHECK(*half.fpr == 0.5);
    CHECK(*half.fnr == 0.5);

    const BinaryRates only_free = probability_metrics(std::vector<char>{0, 0}, std::vector<double>{0.1, 0.3});
    CHECK_FALSE(only_free.fnr.has_value());
    CHECK(only_free.fpr.has_value());
}

TEST_CASE("label-weighted identity and order invariance") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u;
    std::uniform_int_distribution<int> size(2, 300);
    for (int t = 0; t < 100; ++t) {
        const int n = size(rng);
        std::vector<char> truth(n);
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) {
            truth[i] = u(rng) < 0.3;
            p[i] = u(rng);
        }
        truth[0] = 1;
        truth[1] = 0;
        const double n1 = std::count(truth.begin(), truth.end(), 1), n0 = n - n1;
        const BinaryRates r = probability_metrics(truth, p);
        CHECK(std::abs(*r.mer - (n1 * *r.fnr + n0 * *r.fpr) / n) <= 1e-12);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<char> t2(n);
        std::vector<double> p2(n);
        for (int i = 0; i < n; ++i) {
            t2[i] = truth[perm[i]];
            p2[i] = p[perm[i]];
        }
        const BinaryRates s = probability_metrics(t2, p2);
        CHECK(std::abs(*s.mer - *r.mer) <= 1e-12);
        CHECK(std::abs(*s.fpr - *r.fpr) <= 1e-12);
        CHECK(std::abs(*s.fnr - *r.fnr) <= 1e-12);

        // Degenerate posteriors: probabilistic and counting rates coincide.
        std::vector<char> hard(n);
        std::vector<double> p01(n);
        for (int i = 0; i < n; ++i) {
            hard[i] = p[i] >= 0.5;
            p01[i] = hard[i] ? 1.0 : 0.0;
        }
        const BinaryRates a = probability_metrics(truth, p01), b = hard_metrics(truth, hard);
        CHECK(std::abs(*a.mer - *b.mer) <= 1e-12);
        CHECK(std::abs(*a.fpr - *b.fpr) <= 1e-12);
        CHECK(std::abs(*a.fnr - *b.fnr) <= 1e-12);
    }
}

TEST_CASE("hard metrics") {
    const std::vector<char> truth{1, 1, 0, 0, 0};
    const BinaryRates perfect = hard_metrics(truth, truth);
    CHECK(*perfect.mer == 0.0);
    CHECK(*perfect.fpr == 0.0);
    CHECK(*perfect.fnr == 0.0);
    const BinaryRates all = hard_metrics(truth, std::vector<char>(5, 1));
    CHECK(*all.fpr == 1.0);
    CHECK(*all.fnr == 0.0);

    std::mt19937_64 rng(5);
    std::bernoulli_distribution coin(0.4);
    std::vector<char> t(200), p(200);
    int tp = 0, tn = 0, fp = 0, fn = 0;
    for (int i = 0; i < 200; ++i) {
        t[i] = coin(rng);
        p[i] = coin(rng);
        (t[i] ? (p[i] ? tp : fn) : (p[i] ? fp : tn))++;
    }
    const BinaryRates r = hard_metrics(t, p);
    CHECK(*r.mer == doctest::Approx(double(fp + fn) / 200));
    CHECK(*r.fpr == doctest::Approx(double(fp) / (fp + tn)));
    CHECK(*r.fnr == doctest::Approx(double(fn) / (fn + tp)));
}

TEST_CASE("average entropy") {
    std::vector<PosteriorVector> sure{make_posterior({1.0, 0.0}), make_posterior({0.0, 1.0})};
    CHECK(average_entropy(sure) == 0.0);
    std::vector<PosteriorVector> flat{make_posterior({0.5, 0.5}), make_posterior({0.5, 0.5})};
    CHECK(average_entropy(flat) == doctest::Approx(0.6931471805599453));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PosteriorVector> mixed;
    double sum = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double a = u(rng), b = u(rng) * (1 - a);
        const std::vector<double> p{a, b, 1 - a - b};
        mixed.push_back(make_posterior(p));
        for (double v : p) sum -= v > 0 ? v * std::log(v) : 0.0;
    }
    CHECK(std::abs(average_entropy(mixed) - sum / 50) <= 1e-12);
    CHECK_THROWS(average_entropy(std::span<const PosteriorVector>{}));
}

TEST_CASE("stratified split counts") {
    const auto small = labels_with_counts({{"x", 10}, {"y", 10}});
    const Split s = stratified_split(small, 0.7, 1);
    CHECK(s.train.size() == 14u);
    CHECK(s.validation.size() == 6u);
    int x = 0;
    for (auto i : s.train) x += small[i] == "x";
    CHECK(x == 7);

    const auto big = labels_with_counts({{"defect_free", 13827}, {"dirt", 4234}, {"crater", 372}});
    const Split b = stratified_split(big, 0.7, 2024);
    std::map<std::string, int> train;
    for (auto i : b.train) train[big[i]]++;
    CHECK(train["defect_free"] == 9679);
    CHECK(train["dirt"] == 2964);
    CHECK(train["crater"] == 260);

    // Disjoint, covering, sorted and reproducible.
    std::vector<std::size_t> all = b.train;
    all.insert(all.end(), b.validation.begin(), b.validation.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(std::is_sorted(b.train.begin(), b.train.end()));
    const Split again = stratified_split(big, 0.7, 2024);
    CHECK(again.train == b.train);
    CHECK(stratified_split(big, 0.7, 2025).train != b.train);

    CHECK_THROWS_AS(stratified_split(small, 1.0, 1), UsageError);
    CHECK_THROWS_AS(stratified_split(labels_with_counts({{"x", 1}, {"y", 4}}), 0.7, 1), DataError);
}

TEST_CASE("summaries") {
    const MetricSeries one = summarize({0.25});
    CHECK(*one.mean == 0.25);
    CHECK_FALSE(one.se.has_value());

    const MetricSeries flat = summarize({0.1, 0.1, 0.1});
    CHECK(*flat.se == 0.0);

    const MetricSeries s = summarize({1.0, 2.0, std::nullopt, 6.0});
    CHECK(*s.mean == doctest::Approx(3.0));
    const std::vector<double> v{1.0, 2.0, 6.0};
    CHECK(*s.se == doctest::Approx(oracle::sample_sd(v) / std::sqrt(3.0)));
}

TEST_CASE("repeated evaluation report structure") {
    GenerationConfig gen;
    gen.counts = {{"defect_free", 40}, {"dirt", 14}, {"crater", 6}};
    gen.m = 35;
    const auto patches = generate_patches(gen, 5);
    std::vector<Patch> raw;
    for (const auto& p : patches) raw.push_back(p.patch);
    const auto features = extract_batch(raw, FeatureKind::edf, {}, 2);

    EvaluationConfig cfg;
    cfg.seed = 3;
    const EvaluationReport r = repeated_evaluation(features, cfg);
    CHECK(r.classes == kClasses);
    CHECK(r.n_total == 60u);
    CHECK(r.n_defect == 20u);
    CHECK(r.run_seeds.size() == 10u);
    REQUIRE(r.has_binary_view());
    for (const char* key : {"mer", "fpr", "fnr", "prob_mer", "prob_fpr", "prob_fnr", "avg_entropy"}) {
        CHECK(r.binary.at(key).runs.size() == 10u);
        CHECK(r.binary.at(key).mean.has_value());
        CHECK(r.binary.at(key).se.has_value());
    }
    for (const char* key : {"mer", "prob_mer", "avg_entropy"}) CHECK(r.multiclass.at(key).runs.size() == 10u);

    const std::string csv = report_to_csv(r);
    CHECK(csv.find("binary,mer,run_10,") != std::string::npos);
    CHECK(csv.find("binary,mer,mean,") != std::string::npos);
    CHECK(csv.find("binary,mer,se,") != std::string::npos);

    cfg.runs = 1;
    const EvaluationReport single = repeated_evaluation(features, cfg);
    CHECK_FALSE(single.binary.at("mer").se.has_value());

    // Same inputs and seed give the same document.
    cfg.runs = 3;
    CHECK(report_to_json(repeated_evaluation(features, cfg)) == report_to_json(repeated_evaluation(features, cfg)));
}
