#include "bcops/conformal.hpp"
#include "bcops/datagen.hpp"
#include "bcops/metrics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace {

using bcops::class_label;
using bcops::forest_config;
using bcops::labeled_dataset;
using bcops::prediction_set;
using bcops::rng_stream;
using bcops::unlabeled_dataset;

TEST(ConformalPValue, DirectCount) {
    const std::vector<double> cal{ 0.1, 0.2, 0.3, 0.4 };
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(0.25, cal), 0.6);
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(0.05, cal), 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(0.4, cal), 1.0);
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(9.0, cal), 1.0);
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(0.3, cal), 4.0 / 5.0);
}

TEST(ConformalPValue, EmptyCalibrationIsOne) {
    EXPECT_DOUBLE_EQ(bcops::conformal_p_value(-3.0, {}), 1.0);
}

TEST(ConformalPValue, MatchesRankRecount) {
    std::mt19937_64 gen{ 99 };
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>{ 0, 12 }(gen);
        std::vector<double> cal(n);
        for (auto &c : cal) {
            c = std::uniform_int_distribution<int>{ 0, 6 }(gen) / 6.0;
        }
        const double score = std::uniform_int_distribution<int>{ -1, 7 }(gen) / 6.0;
        const double expected = bcops::testing::brute_force_p_value(score, cal);
        std::sort(cal.begin(), cal.end());
        ASSERT_EQ(bcops::conformal_p_value(score, cal), expected);
    }
}

TEST(PredictionSet, SetSemantics) {
    const prediction_set s{ { { 3 }, { 1 }, { 3 } } };
    EXPECT_EQ(s.size(), 2U);
    EXPECT_TRUE(s.contains(class_label{ 1 }));
    EXPECT_FALSE(s.contains(class_label{ 2 }));
    EXPECT_TRUE(prediction_set{}.empty());
    EXPECT_TRUE(prediction_set{}.is_subset_of(s));
    EXPECT_TRUE((prediction_set{ { { 3 } } }.is_subset_of(s)));
    EXPECT_FALSE(s.is_subset_of(prediction_set{ { { 3 } } }));
}

forest_config small_forest(std::size_t trees = 100) {
    forest_config config;
    config.n_trees = trees;
    return config;
}

// One fitted Example-1 model shared by the tests below.
class FittedExample1 : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        const rng_stream stream{ 2023, 1 };
        train_ = std::make_unique<labeled_dataset>(bcops::gen_example1_train(stream.derive(1)));
        test_ = std::make_unique<unlabeled_dataset>(bcops::gen_example1_test(stream.derive(2)));
        model_ = std::make_unique<bcops::bcops_model>(bcops::fit_bcops(*train_, *test_, small_forest(), 0.05, stream.derive(4)));
    }
    static void TearDownTestSuite() {
        model_.reset();
        test_.reset();
        train_.reset();
    }

    static std::unique_ptr<labeled_dataset> train_;
    static std::unique_ptr<unlabeled_dataset> test_;
    static std::unique_ptr<bcops::bcops_model> model_;
};

std::unique_ptr<labeled_dataset> FittedExample1::train_;
std::unique_ptr<unlabeled_dataset> FittedExample1::test_;
std::unique_ptr<bcops::bcops_model> FittedExample1::model_;

TEST_F(FittedExample1, CoverageAtLeastNinetyThreePercentPerClass) {
    const bcops::evaluation_frame frame{ bcops::predict_all(*model_), *test_->ground_truth() };
    EXPECT_GE(bcops::class_coverage(frame, class_label{ 1 }), 0.93);
    EXPECT_GE(bcops::class_coverage(frame, class_label{ 2 }), 0.93);
}

TEST_F(FittedExample1, ModelStructure) {
    EXPECT_EQ(model_->class_count(), 2U);
    EXPECT_EQ(model_->test_size(), 1500U);
    std::size_t fold_one = 0;
    for (std::size_t row = 0; row < model_->test_size(); ++row) {
        const int f = model_->scoring_fold(row);
        ASSERT_TRUE(f == 1 || f == 2);
        fold_one += f == 1 ? 1 : 0;
    }
    EXPECT_EQ(fold_one, 750U);
    for (const std::uint32_t k : { 1U, 2U }) {
        for (const int f : { 1, 2 }) {
            const auto cal = model_->calibration(class_label{ k }, f);
            EXPECT_EQ(cal.size(), 250U);
            EXPECT_TRUE(std::is_sorted(cal.begin(), cal.end()));
            EXPECT_EQ(model_->classifier(class_label{ k }, f).trees().size(), 100U);
        }
    }
    EXPECT_TRUE(model_->warnings().empty());
}

TEST_F(FittedExample1, ExtremeAlphas) {
    for (std::size_t row = 0; row < model_->test_size(); row += 7) {
        // every p-value is at most 1, so alpha = 1 abstains everywhere
        EXPECT_TRUE(bcops::predict_set(*model_, row, 1.0).empty());
        // every p-value is at least 1/(n+1) > 1e-9
        EXPECT_EQ(bcops::predict_set(*model_, row, 1e-9).size(), 2U);
    }
}

TEST_F(FittedExample1, PredictAllMatchesPredictSet) {
    const auto all = bcops::predict_all(*model_);
    ASSERT_EQ(all.size(), model_->test_size());
    EXPECT_EQ(all, bcops::predict_all(*model_));
    for (std::size_t row = 0; row < all.size(); ++row) {
        EXPECT_EQ(all[row], bcops::predict_set(*model_, row));
    }
    EXPECT_THROW((void) bcops::predict_set(*model_, model_->test_size()), bcops::error);
}

TEST_F(FittedExample1, SetsShrinkAsAlphaGrows) {
    const std::vector<double> alphas{ 0.001, 0.01, 0.05, 0.1, 0.2, 0.5 };
    for (std::size_t row = 0; row < model_->test_size(); ++row) {
        for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
            ASSERT_TRUE(bcops::predict_set(*model_, row, alphas[i + 1]).is_subset_of(bcops::predict_set(*model_, row, alphas[i])));
        }
    }
}

TEST_F(FittedExample1, MonotoneScoreTransformLeavesSetsUnchanged) {
    const auto before = bcops::predict_all(*model_);
    auto transformed = model_->map_scores(class_label{ 1 }, 1, [](double s) { return std::exp(3.0 * s) - 7.0; });
    transformed = transformed.map_scores(class_label{ 2 }, 2, [](double s) { return 0.5 * s * s * s + s; });
    EXPECT_EQ(bcops::predict_all(transformed), before);
    // a non-monotone map is expected to change something
    const auto flipped = model_->map_scores(class_label{ 1 }, 1, [](double s) { return -s; });
    EXPECT_NE(bcops::predict_all(flipped), before);
}

TEST_F(FittedExample1, RefitIsDeterministic) {
    const rng_stream stream{ 2023, 1 };
    const auto again = bcops::fit_bcops(*train_, *test_, small_forest(), 0.05, stream.derive(4), { 5.0, 2 });
    EXPECT_EQ(bcops::predict_all(again), bcops::predict_all(*model_));
    for (std::size_t row = 0; row < again.test_size(); row += 11) {
        EXPECT_EQ(again.score(row, class_label{ 1 }), model_->score(row, class_label{ 1 }));
    }
}

TEST(FitBcops, FarOutliersAreRejected) {
    const rng_stream stream{ 77, 0 };
    const auto train = bcops::gen_example1_train(stream.derive(1));
    const auto base = bcops::gen_example1_test(stream.derive(2));
    const std::size_t far = 200;
    bcops::matrix features{ base.size() + far, base.feature_count() };
    std::vector<bcops::truth> truths = *base.ground_truth();
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::copy(base.features().row(i).begin(), base.features().row(i).end(), features.row(i).begin());
    }
    std::mt19937_64 gen{ 5 };
    std::normal_distribution<double> jitter{ 0.0, 1.0 };
    for (std::size_t i = 0; i < far; ++i) {
        for (auto &v : features.row(base.size() + i)) {
            v = 100.0 + jitter(gen);
        }
        truths.emplace_back(bcops::outlier_mark{});
    }
    const unlabeled_dataset test{ std::move(features), truths };
    const auto model = bcops::fit_bcops(train, test, small_forest(), 0.05, stream.derive(4));
    std::size_t empty = 0;
    for (std::size_t i = 0; i < far; ++i) {
        empty += bcops::predict_set(model, base.size() + i).empty() ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(empty) / far, 0.95);
}

TEST(FitBcops, DuplicatedClassGivesIndistinguishablePValues) {
    // One p-value per class per run, at independently drawn rows, so pooled values are independent.
    std::vector<double> p1;
    std::vector<double> p2;
    const auto spec = bcops::example1::class_spec(1);
    for (std::uint64_t run = 0; run < 200; ++run) {
        const rng_stream stream{ 500, run };
        auto engine = stream.derive(1).engine();
        bcops::matrix features{ 200, bcops::synthetic_dimension };
        std::vector<class_label> labels;
        for (std::size_t i = 0; i < 200; ++i) {
            spec.sample(engine, features.row(i));
            labels.push_back(class_label{ i < 100 ? 1U : 2U });
        }
        bcops::matrix test_features{ 200, bcops::synthetic_dimension };
        for (std::size_t i = 0; i < 200; ++i) {
            (i < 150 ? spec : bcops::example1::outlier_spec()).sample(engine, test_features.row(i));
        }
        const labeled_dataset train{ std::move(features), std::move(labels), 2 };
        const unlabeled_dataset test{ std::move(test_features) };
        const auto model = bcops::fit_bcops(train, test, small_forest(10), 0.05, stream.derive(3));
        std::uniform_int_distribution<std::size_t> pick{ 0, 149 };
        p1.push_back(model.p_value(pick(engine), class_label{ 1 }));
        p2.push_back(model.p_value(pick(engine), class_label{ 2 }));
    }
    EXPECT_GT(bcops::testing::ks_two_sample_p(p1, p2), 0.01);
}

TEST(FitBcops, PValuesAreSuperUniformOnHeldOutClassRows) {
    // held-out class rows drawn from the training distributions
    std::vector<double> pooled;
    for (std::uint64_t run = 0; run < 3; ++run) {
        const rng_stream stream{ 900 + run, 0 };
        const auto train = bcops::gen_example1_train(stream.derive(1));
        const auto test = bcops::gen_example1_test(stream.derive(2));
        const auto model = bcops::fit_bcops(train, test, small_forest(50), 0.05, stream.derive(3));
        for (std::size_t row = 0; row < test.size(); ++row) {
            if (const auto *k = std::get_if<class_label>(&(*test.ground_truth())[row])) {
                pooled.push_back(model.p_value(row, *k));
            }
        }
    }
    ASSERT_GE(pooled.size(), 2000U);
    for (const double t : { 0.05, 0.1, 0.2 }) {
        const auto below = static_cast<double>(std::count_if(pooled.begin(), pooled.end(), [t](double p) { return p <= t; }));
        EXPECT_LE(below / static_cast<double>(pooled.size()), t + 0.03) << "t=" << t;
    }
}

TEST(FitBcops, CoverageAveragedOverRepetitions) {
    const double alpha = 0.05;
    double sum1 = 0;
    double sum2 = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        const rng_stream stream{ 31, static_cast<std::uint64_t>(r) };
        const auto train = bcops::gen_example1_train(stream.derive(1));
        const auto test = bcops::gen_example1_test(stream.derive(2));
        const auto model = bcops::fit_bcops(train, test, small_forest(25), alpha, stream.derive(3));
        const bcops::evaluation_frame frame{ bcops::predict_all(model), *test.ground_truth() };
        sum1 += bcops::class_coverage(frame, class_label{ 1 });
        sum2 += bcops::class_coverage(frame, class_label{ 2 });
    }
    EXPECT_GE(sum1 / reps, 1 - alpha - 0.02);
    EXPECT_GE(sum2 / reps, 1 - alpha - 0.02);
}

labeled_dataset tiny_train(const std::vector<std::uint32_t> &ids, std::uint32_t k) {
    bcops::matrix features{ ids.size(), 2 };
    std::vector<class_label> labels;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        features(i, 0) = static_cast<double>(ids[i]) + 0.01 * static_cast<double>(i);
        features(i, 1) = static_cast<double>(i % 3);
        labels.push_back(class_label{ ids[i] });
    }
    return { std::move(features), std::move(labels), k };
}

unlabeled_dataset tiny_test(std::size_t n) {
    bcops::matrix features{ n, 2 };
    for (std::size_t i = 0; i < n; ++i) {
        features(i, 0) = static_cast<double>(i % 4);
        features(i, 1) = static_cast<double>(i % 5);
    }
    return unlabeled_dataset{ std::move(features) };
}

TEST(FitBcops, ClassAbsentFromTrainingIsAnError) {
    const auto train = tiny_train({ 1, 1, 1, 1 }, 2);
    try {
        (void) bcops::fit_bcops(train, tiny_test(10), small_forest(5), 0.1, rng_stream{});
        FAIL();
    } catch (const bcops::error &e) {
        EXPECT_NE(std::string{ e.what() }.find("class 2 absent"), std::string::npos) << e.what();
    }
}

TEST(FitBcops, SingletonClassFailsOpenWithWarnings) {
    const auto train = tiny_train({ 1, 1, 1, 1, 1, 1, 2 }, 2);
    const auto model = bcops::fit_bcops(train, tiny_test(12), small_forest(5), 0.1, rng_stream{ 1, 2 });
    EXPECT_FALSE(model.warnings().empty());
    for (const auto &w : model.warnings()) {
        EXPECT_EQ(w.k, class_label{ 2 });
    }
    for (std::size_t row = 0; row < model.test_size(); ++row) {
        // rows scored against the empty calibration fold get p = 1, the rest p in {1/2, 1}
        const double p = model.p_value(row, class_label{ 2 });
        if (model.calibration(class_label{ 2 }, model.scoring_fold(row)).empty()) {
            EXPECT_DOUBLE_EQ(p, 1.0);
            EXPECT_TRUE(bcops::predict_set(model, row).contains(class_label{ 2 }));
        } else {
            EXPECT_TRUE(p == 0.5 || p == 1.0) << p;
        }
    }
}

TEST(FitBcops, RejectsBadArguments) {
    const auto train = tiny_train({ 1, 1, 2, 2, 1, 2 }, 2);
    EXPECT_THROW((void) bcops::fit_bcops(train, tiny_test(10), small_forest(5), 0.0, rng_stream{}), bcops::error);
    EXPECT_THROW((void) bcops::fit_bcops(train, tiny_test(10), small_forest(5), 1.0, rng_stream{}), bcops::error);
    EXPECT_THROW((void) bcops::fit_bcops(train, tiny_test(1), small_forest(5), 0.1, rng_stream{}), bcops::error);
    EXPECT_THROW((void) bcops::fit_bcops(train, unlabeled_dataset{ bcops::matrix{ 4, 3 } }, small_forest(5), 0.1, rng_stream{}), bcops::error);
}

TEST(FitBcops, BalanceCapLimitsNegatives) {
    const auto train = tiny_train({ 1, 1, 1, 1, 2, 2, 2, 2 }, 2);
    const auto test = tiny_test(200);
    // 2 positives per class-fold, 100 test rows per fold: cap 5 keeps 10 negatives
    const auto capped = bcops::fit_bcops(train, test, small_forest(3), 0.1, rng_stream{ 4, 4 }, { 5.0, 1 });
    const auto uncapped = bcops::fit_bcops(train, test, small_forest(3), 0.1, rng_stream{ 4, 4 }, { std::nullopt, 1 });
    EXPECT_NE(capped.classifier(class_label{ 1 }, 1), uncapped.classifier(class_label{ 1 }, 1));
}

}  // namespace
