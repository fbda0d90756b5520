#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <evs/metrics.hpp>
#include <evs/rng.hpp>

using namespace evs;

namespace {

Pose pose_at(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
    Pose p;
    p.q = q;
    p.tvec = t;
    return p;
}

// ---------------------------------------------------------------------------
// Naive re-implementation of the detection evaluation, written straight
// from the definitions: greedy score-ordered matching, per-prefix
// precision/recall recounted from scratch, 101-point interpolated AP.
// ---------------------------------------------------------------------------

struct FlatDet {
    std::size_t image;
    std::size_t index;
    double score;
};

std::vector<int> naive_match(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                             double tau) {
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<int> match(dets.size(), -1);
    std::vector<bool> used(gts.size(), false);
    for (std::size_t d : order) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g]) continue;
            const double v = iou(dets[d].bbox, gts[g]);
            if (v >= tau && v > best_iou) {
                best_iou = v;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            match[d] = best;
            used[static_cast<std::size_t>(best)] = true;
        }
    }
    return match;
}

/// bucket: 0 small, 1 medium, 2 large, 3 all
int naive_bucket(double area) {
    if (area <= 22500.0) return 0;
    if (area <= 90000.0) return 1;
    return 2;
}

struct NaivePr {
    double ap = 0.0;
    double max_recall = 0.0;
};

NaivePr naive_pr(const std::vector<std::vector<Detection>>& dets,
                 const std::vector<std::vector<BBox>>& gts, double tau, int bucket) {
    std::size_t gt_count = 0;
    for (const auto& image_gts : gts)
        for (const BBox& g : image_gts)
            if (bucket == 3 || naive_bucket(g.area()) == bucket) ++gt_count;
    if (gt_count == 0) return {};

    std::vector<std::vector<int>> matches;
    for (std::size_t i = 0; i < dets.size(); ++i)
        matches.push_back(naive_match(dets[i], gts[i], tau));

    std::vector<FlatDet> ranked;
    for (std::size_t i = 0; i < dets.size(); ++i)
        for (std::size_t j = 0; j < dets[i].size(); ++j)
            ranked.push_back({i, j, dets[i][j].score});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const FlatDet& a, const FlatDet& b) { return a.score > b.score; });

    // classification of each ranked detection: 1 = TP, 0 = FP, -1 = ignored
    std::vector<int> kind;
    for (const FlatDet& d : ranked) {
        const int m = matches[d.image][d.index];
        if (m < 0)
            kind.push_back(0);
        else if (bucket == 3 || naive_bucket(gts[d.image][static_cast<std::size_t>(m)].area()) ==
                                    bucket)
            kind.push_back(1);
        else
            kind.push_back(-1);
    }

    // one PR point after every counted (non-ignored) detection, recounted
    // from the start of the ranking each time
    std::vector<double> precision, recall;
    for (std::size_t end = 0; end < ranked.size(); ++end) {
        if (kind[end] == -1) continue;
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i <= end; ++i) {
            if (kind[i] == 1) ++tp;
            if (kind[i] == 0) ++fp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
    }

    NaivePr out;
    if (recall.empty()) return out;
    out.max_recall = recall.back();
    double sum = 0.0;
    for (int g = 0; g <= 100; ++g) {
        const double r = static_cast<double>(g) / 100.0;
        double best = -1.0;
        for (std::size_t j = 0; j < recall.size(); ++j)
            if (recall[j] >= r) best = std::max(best, precision[j]);
        if (best >= 0.0) sum += best;
    }
    out.ap = sum / 101.0;
    return out;
}

DetEvalReport naive_eval(const std::vector<std::vector<Detection>>& dets,
                         const std::vector<std::vector<BBox>>& gts) {
    DetEvalReport r;
    r.ap50 = naive_pr(dets, gts, 0.5, 3).ap;
    r.ap75 = naive_pr(dets, gts, 0.75, 3).ap;
    r.ar = (naive_pr(dets, gts, 0.5, 3).max_recall + naive_pr(dets, gts, 0.75, 3).max_recall) / 2;
    const auto avg = [&](int b, bool ap) {
        const NaivePr lo = naive_pr(dets, gts, 0.5, b);
        const NaivePr hi = naive_pr(dets, gts, 0.75, b);
        return ap ? (lo.ap + hi.ap) / 2 : (lo.max_recall + hi.max_recall) / 2;
    };
    r.ap_s = avg(0, true);
    r.ap_m = avg(1, true);
    r.ap_l = avg(2, true);
    r.ar_s = avg(0, false);
    r.ar_m = avg(1, false);
    r.ar_l = avg(2, false);
    return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("pose errors reproduce the stated formulas") {
    const Eigen::Quaterniond identity(1, 0, 0, 0);

    SUBCASE("exact prediction scores zero") {
        const Pose gt = pose_at(identity, {1.0, 2.0, 5.0});
        const PoseErrors e = pose_errors(gt, gt);
        CHECK(e.e_t == 0.0);
        CHECK(e.e_r == 0.0);
        CHECK(e.e_p == 0.0);
    }
    SUBCASE("the quaternion double cover is not an error") {
        Eigen::Quaterniond neg;
        neg.coeffs() = -identity.coeffs();
        const Pose gt = pose_at(identity, {0.0, 0.0, 5.0});
        const Pose pred = pose_at(neg, {0.0, 0.0, 5.0});
        CHECK(pose_errors(pred, gt).e_r == 0.0);
    }
    SUBCASE("half-meter slip at ten meters is five percent") {
        const Pose gt = pose_at(identity, {0.0, 0.0, 10.0});
        const Pose pred = pose_at(identity, {0.0, 0.0, 10.5});
        const PoseErrors e = pose_errors(pred, gt);
        CHECK(e.e_t == doctest::Approx(0.05).epsilon(1e-12));
        CHECK(e.e_r == 0.0);
        CHECK(e.e_p == doctest::Approx(0.05).epsilon(1e-12));
    }
    SUBCASE("a quarter turn reads as pi over two") {
        const Eigen::Quaterniond quarter(
            Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()));
        const Pose gt = pose_at(identity, {0.0, 0.0, 5.0});
        const Pose pred = pose_at(quarter, {0.0, 0.0, 5.0});
        CHECK(pose_errors(pred, gt).e_r ==
              doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    }
    SUBCASE("zero ground-truth translation is rejected") {
        const Pose gt = pose_at(identity, {0.0, 0.0, 0.0});
        const Pose pred = pose_at(identity, {0.0, 0.0, 1.0});
        CHECK_THROWS_AS(pose_errors(pred, gt), std::invalid_argument);
    }
}

TEST_CASE("pose error properties hold on random inputs") {
    Rng rng(91);
    for (int round = 0; round < 100; ++round) {
        const Pose a = pose_at(sample_uniform_quaternion(rng),
                               {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 10)});
        const Pose b = pose_at(sample_uniform_quaternion(rng),
                               {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 10)});

        const PoseErrors ab = pose_errors(a, b);
        const PoseErrors ba = pose_errors(b, a);
        CHECK(ab.e_r == doctest::Approx(ba.e_r).epsilon(1e-12));
        CHECK(ab.e_r >= 0.0);
        CHECK(ab.e_r <= std::numbers::pi + 1e-12);
        CHECK(ab.e_p == ab.e_r + ab.e_t);

        // global rotation leaves the rotation error alone
        const Eigen::Quaterniond g = sample_uniform_quaternion(rng);
        const Pose ga = pose_at((g * a.q).normalized(), a.tvec);
        const Pose gb = pose_at((g * b.q).normalized(), b.tvec);
        CHECK(pose_errors(ga, gb).e_r == doctest::Approx(ab.e_r).epsilon(1e-9));

        // scaling both translations cancels in the relative error
        const double lambda = rng.uniform(0.1, 8.0);
        const Pose sa = pose_at(a.q, lambda * a.tvec);
        const Pose sb = pose_at(b.q, lambda * b.tvec);
        CHECK(pose_errors(sa, sb).e_t == doctest::Approx(ab.e_t).epsilon(1e-9));
    }
}

TEST_CASE("overlap ratio reproduces hand-computed cases") {
    const BBox a{0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, BBox{20, 20, 10, 10}) == 0.0);
    CHECK(iou(a, BBox{5, 0, 10, 10}) == 1.0 / 3.0);
    CHECK(iou(a, BBox{10, 0, 10, 10}) == 0.0);  // touching edges do not overlap
}

TEST_CASE("overlap ratio is symmetric and bounded") {
    Rng rng(92);
    for (int round = 0; round < 200; ++round) {
        const BBox a{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 40),
                     rng.uniform(1, 40)};
        const BBox b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 40),
                     rng.uniform(1, 40)};
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("perfect detections score one everywhere populated") {
    std::vector<std::vector<BBox>> gts = {
        {BBox{0, 0, 100, 100}, BBox{200, 200, 250, 250}},  // small, medium
        {BBox{10, 10, 400, 400}},                          // large
    };
    std::vector<std::vector<Detection>> dets(2);
    for (std::size_t i = 0; i < gts.size(); ++i)
        for (const BBox& g : gts[i]) dets[i].push_back({g, 1.0});

    const DetEvalReport r = detection_eval(dets, gts);
    CHECK_FALSE(r.empty);
    CHECK(r.ap50 == doctest::Approx(1.0));
    CHECK(r.ap75 == doctest::Approx(1.0));
    CHECK(r.ar == doctest::Approx(1.0));
    CHECK(r.ap_s == doctest::Approx(1.0));
    CHECK(r.ap_m == doctest::Approx(1.0));
    CHECK(r.ap_l == doctest::Approx(1.0));
    CHECK(r.ar_s == doctest::Approx(1.0));
    CHECK(r.total_gts == 3);
    CHECK(r.total_dets == 3);
}

TEST_CASE("no detections scores zero without flagging empty") {
    std::vector<std::vector<BBox>> gts = {{BBox{0, 0, 50, 50}}};
    std::vector<std::vector<Detection>> dets(1);
    const DetEvalReport r = detection_eval(dets, gts);
    CHECK_FALSE(r.empty);
    CHECK(r.ap50 == 0.0);
    CHECK(r.ar == 0.0);
}

TEST_CASE("no ground truth flags the report as empty") {
    std::vector<std::vector<BBox>> gts(3);
    std::vector<std::vector<Detection>> dets(3);
    dets[0].push_back({BBox{0, 0, 10, 10}, 0.8});
    const DetEvalReport r = detection_eval(dets, gts);
    CHECK(r.empty);
    CHECK(r.ap50 == 0.0);
    CHECK(r.ar == 0.0);
}

TEST_CASE("a hand-built mixed case matches the naive evaluation") {
    // image 0: one small gt; an exact hit and a far miss
    // image 1: one large gt and one medium gt; a loose hit on the large one
    std::vector<std::vector<BBox>> gts = {
        {BBox{10, 10, 100, 100}},
        {BBox{50, 50, 400, 400}, BBox{500, 50, 200, 200}},
    };
    std::vector<std::vector<Detection>> dets = {
        {{BBox{10, 10, 100, 100}, 0.9}, {BBox{700, 700, 100, 100}, 0.8}},
        {{BBox{80, 80, 400, 400}, 0.95}, {BBox{505, 55, 190, 190}, 0.6}},
    };

    const DetEvalReport got = detection_eval(dets, gts);
    const DetEvalReport want = naive_eval(dets, gts);
    CHECK(got.ap50 == doctest::Approx(want.ap50).epsilon(1e-12));
    CHECK(got.ap75 == doctest::Approx(want.ap75).epsilon(1e-12));
    CHECK(got.ar == doctest::Approx(want.ar).epsilon(1e-12));
    CHECK(got.ap_s == doctest::Approx(want.ap_s).epsilon(1e-12));
    CHECK(got.ap_m == doctest::Approx(want.ap_m).epsilon(1e-12));
    CHECK(got.ap_l == doctest::Approx(want.ap_l).epsilon(1e-12));
    // the loose large hit passes IoU 0.5 but fails 0.75
    CHECK(got.ap50 > got.ap75);
}

TEST_CASE("the evaluation matches the naive oracle on random small cases") {
    Rng rng(93);
    for (int round = 0; round < 120; ++round) {
        const std::size_t n_images = 1 + rng.uniform_int(4);
        std::vector<std::vector<BBox>> gts(n_images);
        std::vector<std::vector<Detection>> dets(n_images);
        for (std::size_t i = 0; i < n_images; ++i) {
            const std::size_t n_gt = rng.uniform_int(5);
            const std::size_t n_det = rng.uniform_int(6);
            for (std::size_t g = 0; g < n_gt; ++g) {
                // snapped coordinates force frequent overlaps and IoU ties
                const double x = 40.0 * static_cast<double>(rng.uniform_int(8));
                const double y = 40.0 * static_cast<double>(rng.uniform_int(8));
                const double w = 40.0 + 80.0 * static_cast<double>(rng.uniform_int(4));
                gts[i].push_back(BBox{x, y, w, w + 40.0 * static_cast<double>(rng.uniform_int(3))});
            }
            for (std::size_t d = 0; d < n_det; ++d) {
                const double x = 40.0 * static_cast<double>(rng.uniform_int(8));
                const double y = 40.0 * static_cast<double>(rng.uniform_int(8));
                const double w = 40.0 + 80.0 * static_cast<double>(rng.uniform_int(4));
                const double scores[] = {0.3, 0.6, 0.9};  // ties are common
                dets[i].push_back({BBox{x, y, w, w + 40.0 * static_cast<double>(rng.uniform_int(3))},
                                   scores[rng.uniform_int(3)]});
            }
        }

        const DetEvalReport got = detection_eval(dets, gts);
        const DetEvalReport want = naive_eval(dets, gts);
        if (got.total_gts == 0) {
            CHECK(got.empty);
            continue;
        }
        CHECK(got.ap50 == doctest::Approx(want.ap50).epsilon(1e-12));
        CHECK(got.ap75 == doctest::Approx(want.ap75).epsilon(1e-12));
        CHECK(got.ar == doctest::Approx(want.ar).epsilon(1e-12));
        CHECK(got.ap_s == doctest::Approx(want.ap_s).epsilon(1e-12));
        CHECK(got.ap_m == doctest::Approx(want.ap_m).epsilon(1e-12));
        CHECK(got.ap_l == doctest::Approx(want.ap_l).epsilon(1e-12));
        CHECK(got.ar_s == doctest::Approx(want.ar_s).epsilon(1e-12));
        CHECK(got.ar_m == doctest::Approx(want.ar_m).epsilon(1e-12));
        CHECK(got.ar_l == doctest::Approx(want.ar_l).epsilon(1e-12));
    }
}

TEST_CASE("coverage counts only confident converged frames") {
    SUBCASE("unanimous outcomes") {
        std::vector<FrameOutcome> all_good(10, FrameOutcome{0.95, true, true});
        CHECK(data_percent(all_good) == 100.0);
        std::vector<FrameOutcome> none(10, FrameOutcome{0.95, false, false});
        CHECK(data_percent(none) == 0.0);
    }
    SUBCASE("24 of 100") {
        std::vector<FrameOutcome> frames(100, FrameOutcome{0.95, true, true});
        for (std::size_t i = 24; i < frames.size(); ++i) frames[i].det_score = 0.5;
        CHECK(data_percent(frames) == 24.0);
    }
    SUBCASE("the detector gate is inclusive at the threshold") {
        std::vector<FrameOutcome> frames = {{0.9, true, true}, {0.89, true, true}};
        CHECK(data_percent(frames) == 50.0);
    }
    SUBCASE("a pose that failed to converge does not count") {
        std::vector<FrameOutcome> frames = {{0.95, true, false}, {0.95, true, true}};
        CHECK(data_percent(frames) == 50.0);
    }
    SUBCASE("empty input") { CHECK(data_percent({}) == 0.0); }
}

}  // TEST_SUITE
