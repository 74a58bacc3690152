#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gapforge/encoder.hpp"
#include "gapforge/vocab.hpp"

using namespace gapforge;

namespace {

EncoderConfig small_config(int k = 8, int max_len = 32) {
    EncoderConfig cfg;
    cfg.k = k;
    cfg.max_len = max_len;
    cfg.vocab = Vocabulary::build({"un deux trois quatre cinq six sept huit a b c"});
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("register_markers is explicit and idempotent") {
    EncoderConfig cfg;
    register_markers(cfg);
    const int open = cfg.vocab.open_id();
    const int close = cfg.vocab.close_id();
    CHECK(open >= 0);
    CHECK(close >= 0);
    CHECK(open != close);
    const std::size_t size = cfg.vocab.size();
    register_markers(cfg);
    CHECK(cfg.vocab.size() == size);
    CHECK(cfg.vocab.open_id() == open);
}

TEST_CASE("marker tokens stay atomic under tokenization") {
    Vocabulary vocab = Vocabulary::build({"a b c"});
    TokenizedText tok = tokenize(vocab, "a [[b]] c");
    REQUIRE(tok.size() == 5);
    CHECK(tok.ids[0] == vocab.id("a"));
    CHECK(tok.ids[1] == vocab.open_id());
    CHECK(tok.ids[2] == vocab.id("b"));
    CHECK(tok.ids[3] == vocab.close_id());
    CHECK(tok.ids[4] == vocab.id("c"));
}

TEST_CASE("encoder output shapes follow the input") {
    TinyEncoderD enc(small_config());
    const Vocabulary& vocab = enc.vocab();

    TokenizedText empty;
    auto out0 = enc.encode(empty);
    CHECK(out0.sequence_vector.size() == 8);
    CHECK(out0.token_vectors.rows() == 0);

    TokenizedText seven = tokenize(vocab, "un deux trois quatre cinq six sept");
    REQUIRE(seven.size() == 7);
    auto out7 = enc.encode(seven);
    CHECK(out7.token_vectors.rows() == 7);
    CHECK(out7.token_vectors.cols() == 8);
    CHECK(out7.sequence_vector.size() == 8);
}

TEST_CASE("encoding is deterministic under frozen parameters") {
    TinyEncoderD enc(small_config());
    TokenizedText tok = tokenize(enc.vocab(), "un deux trois");
    auto a = enc.encode(tok);
    auto b = enc.encode(tok);
    CHECK(a.sequence_vector == b.sequence_vector);
    CHECK(a.token_vectors == b.token_vectors);
}

TEST_CASE("same seed yields identical fresh parameters") {
    TinyEncoderD a(small_config());
    TinyEncoderD b(small_config());
    TokenizedText tok = tokenize(a.vocab(), "six sept huit");
    CHECK(a.encode(tok).sequence_vector == b.encode(tok).sequence_vector);
}

TEST_CASE("over-long input raises SequenceTooLong") {
    TinyEncoderD enc(small_config(8, 4));
    // 4 tokens plus the internal start token exceed max_len 4
    TokenizedText tok = tokenize(enc.vocab(), "un deux trois quatre");
    REQUIRE(tok.size() == 4);
    CHECK_THROWS_AS(enc.encode(tok), SequenceTooLong);
    TokenizedText ok = tokenize(enc.vocab(), "un deux trois");
    CHECK_NOTHROW(enc.encode(ok));
}

TEST_CASE("encoder checkpoints round-trip") {
    const std::string dir = "enc_ckpt_test";
    {
        TinyEncoderD enc(small_config());
        enc.save(dir);
    }
    TinyEncoderD back = TinyEncoderD::load(dir);
    TinyEncoderD fresh(small_config());
    TokenizedText tok = tokenize(fresh.vocab(), "a b c un");
    CHECK(back.encode(tok).sequence_vector == fresh.encode(tok).sequence_vector);
    CHECK(back.encode(tok).token_vectors == fresh.encode(tok).token_vectors);

    // corrupting the stored vocabulary must be caught by the hash
    {
        std::ofstream vf(dir + "/vocab.txt", std::ios::app);
        vf << "intrus\n";
    }
    CHECK_THROWS_AS(TinyEncoderD::load(dir), CheckpointMismatch);
    std::filesystem::remove_all(dir);
}

TEST_CASE("analytic encoder gradients match finite differences") {
    EncoderConfig cfg = small_config(4, 16);
    TinyEncoderD enc(cfg);
    TokenizedText tok = tokenize(enc.vocab(), "un deux trois");

    // scalar objective: sum of sequence vector plus sum of token vectors
    auto objective = [&](TinyEncoderD& e) {
        auto out = e.encode(tok);
        return out.sequence_vector.sum() + out.token_vectors.sum();
    };

    TinyEncoderD::Cache cache;
    auto out = enc.forward(tok, cache);
    enc.zero_grads();
    Eigen::MatrixXd d_tokens = Eigen::MatrixXd::Ones(out.token_vectors.rows(), cfg.k);
    Eigen::VectorXd d_seq = Eigen::VectorXd::Ones(cfg.k);
    enc.backward(cache, d_tokens, d_seq);

    const double h = 1e-5;
    enc.visit_params([&](const std::string& name, auto& value, auto& grad) {
        // probe a handful of coordinates per tensor
        for (Eigen::Index idx = 0; idx < std::min<Eigen::Index>(value.size(), 3); ++idx) {
            const double saved = value.data()[idx];
            value.data()[idx] = saved + h;
            const double up = objective(enc);
            value.data()[idx] = saved - h;
            const double down = objective(enc);
            value.data()[idx] = saved;
            const double numeric = (up - down) / (2 * h);
            const double analytic = grad.data()[idx];
            INFO(name << "[" << idx << "]");
            CHECK(std::abs(numeric - analytic) <
                  1e-4 * std::max(1.0, std::abs(numeric)));
        }
    });
}
