#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "gapforge/model.hpp"
#include "gapforge/vocab.hpp"

using namespace gapforge;

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

EncodedSequence<double> sequence_of(const Mat& rows) {
    EncodedSequence<double> enc;
    enc.token_vectors = rows;
    enc.sequence_vector = Vec::Zero(rows.cols());
    return enc;
}

void zero_ffnn(SpanScorer<double>& scorer) {
    scorer.visit_params([](const std::string& name, auto& value, auto&) {
        if (name.rfind("ffnn.", 0) == 0) value.setZero();
    });
}

}  // namespace

TEST_CASE("span representation basics") {
    SpanScorer<double> scorer(3, 2, 4, 11);
    Mat rows = Mat::Random(5, 3);

    SUBCASE("zero FFNN weights give the zero vector") {
        zero_ffnn(scorer);
        auto enc = sequence_of(rows);
        CHECK(scorer.span_representation(enc, {1, 3}).isZero());
    }

    SUBCASE("width-1 spans feed the same vector to both endpoint slots") {
        Mat same = rows;
        same.row(2) = same.row(0);  // identical token vectors at 0 and 2
        auto enc = sequence_of(same);
        CHECK(scorer.span_representation(enc, {0, 0})
                  .isApprox(scorer.span_representation(enc, {2, 2})));
    }

    SUBCASE("out-of-bounds and over-wide spans are rejected") {
        auto enc = sequence_of(rows);
        CHECK_THROWS_AS(scorer.span_representation(enc, {3, 5}), SpanOutOfBounds);
        CHECK_THROWS_AS(scorer.span_representation(enc, {2, 1}), SpanOutOfBounds);
        CHECK_THROWS_AS(scorer.span_representation(enc, {0, 4}), SpanOutOfBounds);
    }
}

TEST_CASE("span representation matches a hand-computed FFNN") {
    // k = 2, d_w = 2: input is (h_start, h_end, width embedding), 6 numbers
    SpanScorer<double> scorer(2, 2, 3, 5);
    Mat w1(6, 2), w2(2, 2);
    w1 << 0.5, -0.25, 0.0, 1.0, 0.75, 0.0, -0.5, 0.5, 0.25, 0.25, 1.0, -1.0;
    w2 << 1.0, 0.5, -1.0, 2.0;
    Vec b1(2), b2(2);
    b1 << 0.1, -0.2;
    b2 << 0.0, 0.3;
    scorer.visit_params([&](const std::string& name, auto& value, auto&) {
        if (name == "ffnn.w1") value = w1;
        if (name == "ffnn.b1") value = b1;
        if (name == "ffnn.w2") value = w2;
        if (name == "ffnn.b2") value = b2;
        if (name == "width_emb") value = Mat::Zero(3, 2);
    });
    Mat rows(3, 2);
    rows << 1.0, 2.0, -1.0, 0.5, 0.25, 0.0;
    auto enc = sequence_of(rows);

    // oracle in plain arrays: x = (1, 2, 0.25, 0, 0, 0), width embedding zeroed
    const double x[6] = {1.0, 2.0, 0.25, 0.0, 0.0, 0.0};
    double z[2], h[2], y[2];
    for (int j = 0; j < 2; ++j) {
        z[j] = b1[j];
        for (int i = 0; i < 6; ++i) z[j] += x[i] * w1(i, j);
        h[j] = std::max(0.0, z[j]);
    }
    for (int j = 0; j < 2; ++j) {
        y[j] = b2[j];
        for (int i = 0; i < 2; ++i) y[j] += h[i] * w2(i, j);
    }
    const Vec rep = scorer.span_representation(enc, {0, 2});
    CHECK(rep[0] == doctest::Approx(y[0]).epsilon(1e-12));
    CHECK(rep[1] == doctest::Approx(y[1]).epsilon(1e-12));
}

TEST_CASE("baseline scoring is a sigmoid over a linear head") {
    SpanScorer<double> scorer(2, 1, 3, 0);
    scorer.mutable_w().setZero();
    scorer.mutable_bias() = 0.0;
    Vec h(2);
    h << 1.0, 0.0;
    CHECK(score_baseline(h, scorer) == doctest::Approx(0.5));

    scorer.mutable_w() << 0.5, 0.0;
    CHECK(score_baseline(h, scorer) == doctest::Approx(0.62246).epsilon(1e-4));

    scorer.mutable_w().setZero();
    scorer.mutable_bias() = 20.0;
    CHECK(score_baseline(h, scorer) == doctest::Approx(1.0).epsilon(1e-8));
    scorer.mutable_bias() = -20.0;
    CHECK(score_baseline(h, scorer) < 1e-8);
}

TEST_CASE("example-aware scoring") {
    SpanScorer<double> scorer(2, 1, 3, 0);
    scorer.mutable_w() << 0.5, 0.0;
    scorer.mutable_bias() = 0.0;
    Vec h(2), ex(2);
    h << 1.0, 0.0;

    SUBCASE("zero exemplar vector reduces to the baseline") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> dist;
        for (int t = 0; t < 1000; ++t) {
            Vec hr(2);
            hr << dist(rng), dist(rng);
            scorer.mutable_w() << dist(rng), dist(rng);
            scorer.mutable_bias() = dist(rng);
            CHECK(std::abs(score_example_aware(hr, Vec(Vec::Zero(2)), scorer) -
                           score_baseline(hr, scorer)) < 1e-12);
        }
    }

    SUBCASE("hand value") {
        ex << 0.5, 0.0;
        CHECK(score_example_aware(h, ex, scorer) ==
              doctest::Approx(0.73106).epsilon(1e-4));
    }

    SUBCASE("monotone in the span-exemplar alignment") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> dist;
        for (int t = 0; t < 200; ++t) {
            Vec hs(2), e1(2), e2(2);
            hs << dist(rng), dist(rng);
            e1 << dist(rng), dist(rng);
            e2 << dist(rng), dist(rng);
            const double lhs = score_example_aware(hs, e1, scorer);
            const double rhs = score_example_aware(hs, e2, scorer);
            const double align = hs.dot(e1 - e2);
            if (align > 0) CHECK(lhs > rhs);
            if (align < 0) CHECK(lhs < rhs);
        }
    }

    SUBCASE("dimension mismatch is rejected") {
        Vec bad(3);
        bad.setZero();
        CHECK_THROWS_AS(scorer.logit_example_aware(h, bad), DimensionMismatch);
    }
}

TEST_CASE("binary cross entropy conventions") {
    Vec p(2), y(2);
    y << 1.0, 0.0;
    p << 1.0, 0.0;  // clipped internally
    CHECK(bce_loss(p, y) < 1e-6);

    p << 0.5, 0.5;
    CHECK(bce_loss(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    p << 0.9, 0.2;
    CHECK(bce_loss(p, y) ==
          doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2.0).epsilon(1e-9));
    CHECK(bce_loss(p, y) == doctest::Approx(0.16425).epsilon(1e-3));

    Vec longer(3);
    longer.setZero();
    CHECK_THROWS_AS(bce_loss(p, longer), LengthMismatch);
    CHECK(bce_loss(Vec(), Vec()) == 0.0);
}

TEST_CASE("predict applies the inclusive threshold over all candidates") {
    Vocabulary vocab = Vocabulary::build({"aa bb cc dd"});
    EncoderConfig cfg;
    cfg.k = 4;
    cfg.max_len = 16;
    cfg.vocab = vocab;
    cfg.seed = 1;
    TinyEncoderD encoder(cfg);
    TokenizedText tok = tokenize(encoder.vocab(), "aa bb cc dd");
    SpanScorer<double> scorer(4, 2, 3, 2);

    SUBCASE("all logits forced low: empty prediction") {
        zero_ffnn(scorer);
        scorer.mutable_w().setZero();
        scorer.mutable_bias() = -10.0;
        CHECK(predict(tok, std::nullopt, encoder, scorer).empty());
    }

    SUBCASE("all logits forced high: every candidate") {
        zero_ffnn(scorer);
        scorer.mutable_w().setZero();
        scorer.mutable_bias() = 10.0;
        const auto all = enumerate_spans(tok.size(), scorer.max_width());
        CHECK(predict(tok, std::nullopt, encoder, scorer).size() == all.size());
    }

    SUBCASE("exact threshold is kept") {
        zero_ffnn(scorer);
        scorer.mutable_w().setZero();
        scorer.mutable_bias() = 0.0;  // every probability is exactly 0.5
        const auto all = enumerate_spans(tok.size(), scorer.max_width());
        CHECK(predict(tok, std::nullopt, encoder, scorer, 0.5).size() == all.size());
        CHECK(predict(tok, std::nullopt, encoder, scorer, 0.5001).empty());
    }

    SUBCASE("mixed logits straddling zero") {
        const auto candidates = enumerate_spans(tok.size(), scorer.max_width());
        const auto enc = encoder.encode(tok);
        const auto got = predict(tok, std::nullopt, encoder, scorer);
        std::set<Span> expected;
        for (const Span& s : candidates)
            if (scorer.logit_baseline(scorer.span_representation(enc, s)) >= 0.0)
                expected.insert(s);
        CHECK(got == expected);
    }
}

TEST_CASE("resolve_overlaps keeps a greedy disjoint cover") {
    std::vector<SpanScore<double>> scores = {
        {{0, 2}, 0.9}, {{1, 3}, 0.8}, {{4, 4}, 0.7}, {{4, 5}, 0.7}, {{7, 8}, 0.5}};
    auto kept = resolve_overlaps(scores);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].span == Span{0, 2});
    CHECK(kept[1].span == Span{4, 4});  // tie broken toward the shorter span
    CHECK(kept[2].span == Span{7, 8});
}

TEST_CASE("exemplar vectors react to content and marker placement") {
    Vocabulary vocab = Vocabulary::build({"voici galor bruma fin"});
    EncoderConfig cfg;
    cfg.k = 8;
    cfg.max_len = 32;
    cfg.vocab = vocab;
    cfg.seed = 9;
    TinyEncoderD encoder(cfg);

    // no gaps at all is degenerate but legal
    const Eigen::VectorXd plain = encode_exemplar("voici galor bruma fin", encoder);
    CHECK(plain.size() == 8);
    CHECK(plain.allFinite());

    const Eigen::VectorXd a1 = encode_exemplar("voici [[galor]] bruma fin", encoder);
    const Eigen::VectorXd a2 = encode_exemplar("voici [[galor]] bruma fin", encoder);
    CHECK(a1 == a2);  // frozen parameters: bitwise identical

    // same words, markers moved: the position-aware encoder must notice
    const Eigen::VectorXd b = encode_exemplar("voici galor [[bruma]] fin", encoder);
    CHECK((a1 - b).norm() > 1e-8);
}

TEST_CASE("exemplar tokenization respects the length budget and marker balance") {
    Vocabulary vocab = Vocabulary::build({"mot gap ici la fin tres long texte"});
    std::string marked = "Mot [[gap]] ici la fin.";
    TokenizedText fit = exemplar_tokens(marked, vocab, 64);
    long opens = 0, closes = 0;
    for (int id : fit.ids) {
        if (id == vocab.open_id()) ++opens;
        if (id == vocab.close_id()) ++closes;
    }
    CHECK(opens == 1);
    CHECK(closes == 1);

    // many sentences, tiny budget: trailing sentences are dropped first
    std::string long_marked;
    for (int i = 0; i < 10; ++i) long_marked += "Tres [[long]] texte ici. ";
    TokenizedText cut = exemplar_tokens(long_marked, vocab, 16);
    CHECK(cut.size() <= 15);
    opens = closes = 0;
    for (int id : cut.ids) {
        if (id == vocab.open_id()) ++opens;
        if (id == vocab.close_id()) ++closes;
    }
    CHECK(opens == closes);
    CHECK(opens >= 1);

    CHECK_THROWS_AS(exemplar_tokens("[[oops", vocab, 64), UnbalancedMarkers);
}
