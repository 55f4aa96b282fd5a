#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "crocs/metrics.hpp"
#include "crocs/runner.hpp"
#include "crocs/rng.hpp"
#include "oracles.hpp"

using namespace crocs;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, int classes) {
    std::vector<int> v(n);
    for (int& x : v) x = static_cast<int>(rng.index(classes));
    return v;
}

// Canonical form under relabeling: first-appearance order.
std::vector<int> canonical(const std::vector<int>& v) {
    std::map<int, int> remap;
    std::vector<int> out;
    for (int x : v) {
        if (!remap.contains(x)) remap[x] = static_cast<int>(remap.size());
        out.push_back(remap[x]);
    }
    return out;
}

}  // namespace

TEST_CASE("accuracy basics") {
    CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
    CHECK(accuracy({0, 0, 0}, {1, 1, 1}) == 0.0);
    CHECK(accuracy({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
    CHECK_THROWS(accuracy({0, 1}, {0}));
}

TEST_CASE("ami: identity, relabeling, degenerate assignment") {
    const std::vector<int> truth = {0, 0, 1, 1, 2, 2, 1};
    CHECK(ami(truth, truth) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<int> relabeled;
    for (int x : truth) relabeled.push_back((x + 1) % 3);
    CHECK(ami(truth, relabeled) == doctest::Approx(1.0).epsilon(1e-12));
    // Accuracy is permutation-sensitive where AMI is not.
    CHECK(accuracy(truth, relabeled) < 1.0);

    const std::vector<int> constant(truth.size(), 0);
    CHECK(ami(truth, constant) == 0.0);
    CHECK(ami(constant, constant) == 0.0);  // zero normalizer rule

    CHECK_THROWS(ami({0, 1}, {0}));
    CHECK_THROWS(ami({0}, {0}));
}

TEST_CASE("ami matches the brute-force oracle on random pairs") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.index(24);  // up to 25
        const int ca = 1 + static_cast<int>(rng.index(5));
        const int cb = 1 + static_cast<int>(rng.index(5));
        const auto a = random_labels(rng, n, ca);
        const auto b = random_labels(rng, n, cb);
        CHECK(std::abs(ami(a, b) - oracle::ami_brute(a, b)) < 1e-9);
        CHECK(std::abs(ami(a, b) - ami(b, a)) < 1e-12);  // symmetry
        CHECK(ami(a, b) <= 1.0 + 1e-12);
    }
}

TEST_CASE("ami equals 1 exactly on relabelings over all 3-class partitions of 6") {
    // Exhaustive: every labeling of 6 items with <= 3 classes, against every
    // permutation of its labels.
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                             {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int code = 0; code < 729; ++code) {
        std::vector<int> a(6);
        int c = code;
        for (int i = 0; i < 6; ++i) {
            a[i] = c % 3;
            c /= 3;
        }
        for (const auto& p : perms) {
            std::vector<int> b;
            for (int x : a) b.push_back(p[x]);
            const bool single_class = canonical(a) == std::vector<int>(6, 0);
            if (single_class) {
                CHECK(ami(a, b) == 0.0);  // degenerate normalizer
            } else {
                CHECK(ami(a, b) == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }

    // And strictly below 1 when not equivalent.
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_labels(rng, 6, 3);
        const auto b = random_labels(rng, 6, 3);
        if (canonical(a) == canonical(b)) continue;
        CHECK(ami(a, b) < 1.0 - 1e-9);
    }
}

namespace {

RetrievalResult make_retrieval(const std::vector<std::vector<int>>& ids) {
    RetrievalResult r;
    for (const auto& list : ids) {
        std::vector<std::pair<int, double>> entry;
        for (std::size_t i = 0; i < list.size(); ++i) {
            entry.emplace_back(list[i], static_cast<double>(i));
        }
        r.per_query.push_back(entry);
    }
    return r;
}

}  // namespace

TEST_CASE("precision_at_k examples") {
    // Instances: 0 exact-matches query A; 1 shares only class with B; 2 none.
    const std::vector<AttributeSet> truth = {{0, 0, 0}, {1, 1, 1}, {2, 0, 1}};
    const std::vector<AttributeSet> queries = {{0, 0, 0}, {1, 0, 0}};

    const auto r = make_retrieval({{0, 2}, {1, 2}});
    CHECK(precision_at_k(r, truth, queries, 2, 1) == doctest::Approx(1.0));
    CHECK(precision_at_k(r, truth, queries, 2, 3) == doctest::Approx(0.5));
    CHECK(precision_at_k(r, truth, queries, 1, 3) == doctest::Approx(0.5));

    // Nothing shared at all.
    const std::vector<AttributeSet> far_truth = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    const std::vector<AttributeSet> far_query = {{0, 0, 0}};
    const auto r2 = make_retrieval({{0, 1, 2}});
    CHECK(precision_at_k(r2, far_truth, far_query, 3, 1) == 0.0);

    CHECK_THROWS(precision_at_k(make_retrieval({{7}}), truth, far_query, 1, 1));
}

TEST_CASE("precision monotonicity on random retrieval tables") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 12 + rng.index(20);
        std::vector<AttributeSet> truth;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back({static_cast<int>(rng.index(3)), static_cast<int>(rng.index(2)),
                             static_cast<int>(rng.index(3))});
        }
        std::vector<AttributeSet> queries;
        for (int q = 0; q < 5; ++q) {
            queries.push_back({static_cast<int>(rng.index(3)), static_cast<int>(rng.index(2)),
                               static_cast<int>(rng.index(3))});
        }
        RetrievalResult r;
        for (int q = 0; q < 5; ++q) {
            std::vector<int> ids(n);
            for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
            for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
            std::vector<std::pair<int, double>> entry;
            for (std::size_t i = 0; i < n; ++i) entry.emplace_back(ids[i], static_cast<double>(i));
            r.per_query.push_back(entry);
        }

        const auto report = precision_report(r, truth, queries, {1, 5, 10});
        for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
            for (std::size_t k = 1; k < report.ks.size(); ++k) {
                CHECK(report.at(t, k) >= report.at(t, k - 1));  // non-decreasing in K
            }
        }
        for (std::size_t t = 1; t < report.thresholds.size(); ++t) {
            for (std::size_t k = 0; k < report.ks.size(); ++k) {
                CHECK(report.at(t, k) <= report.at(t - 1, k));  // tighter threshold
            }
        }
    }
}

TEST_CASE("majority-vote accuracy maps each cluster to its dominant label") {
    // clusters {0: labels 1,1,2} {1: labels 0} -> mapped 1 and 0
    CHECK(crocs::majority_vote_accuracy({1, 1, 2, 0}, {0, 0, 0, 1}) ==
          doctest::Approx(0.75));
    CHECK(crocs::majority_vote_accuracy({0, 1, 0, 1}, {5, 9, 5, 9}) == 1.0);
    CHECK_THROWS(crocs::majority_vote_accuracy({0}, {0, 1}));
}
