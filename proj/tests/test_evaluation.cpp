#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "gapforge/errors.hpp"
#include "gapforge/evaluation.hpp"
#include "gapforge/unicode.hpp"
#include "gapforge/vocab.hpp"

using namespace gapforge;

namespace {

// Deterministic predictor: flags every occurrence of a per-class keyword,
// choosing the class from the exemplar's content (or a fixed keyword when
// the exemplar is ignored).
class KeywordStub : public GapPredictor {
public:
    KeywordStub(Vocabulary vocab, std::map<std::string, std::string> class_keywords,
                std::string fallback)
        : vocab_(std::move(vocab)),
          class_keywords_(std::move(class_keywords)),
          fallback_(std::move(fallback)) {}

    TokenizedText tokenize_input(const std::string& text) const override {
        return tokenize(vocab_, text);
    }

    std::vector<std::pair<Span, double>> score(
        const TokenizedText& input, const std::string& exemplar_marked) const override {
        std::string keyword = fallback_;
        for (const auto& [cls, word] : class_keywords_)
            if (exemplar_marked.find(word) != std::string::npos) keyword = word;
        const int target = vocab_.id(keyword);
        std::vector<std::pair<Span, double>> out;
        for (int i = 0; i < input.size(); ++i)
            if (input.ids[i] == target) out.push_back({{i, i}, 1.0});
        return out;
    }

    int max_width() const override { return 12; }

private:
    Vocabulary vocab_;
    std::map<std::string, std::string> class_keywords_;
    std::string fallback_;
};

}  // namespace

TEST_CASE("prf follows the zero-division convention") {
    Prf a = prf(5, 0, 0);
    CHECK(a.precision == 1.0);
    CHECK(a.recall == 1.0);
    CHECK(a.f1 == 1.0);

    Prf zero = prf(0, 0, 0);
    CHECK(zero.precision == 0.0);
    CHECK(zero.recall == 0.0);
    CHECK(zero.f1 == 0.0);

    Prf half = prf(1, 1, 1);
    CHECK(half.precision == doctest::Approx(0.5));
    CHECK(half.recall == doctest::Approx(0.5));
    CHECK(half.f1 == doctest::Approx(0.5));

    CHECK(prf(0, 3, 0).precision == 0.0);
    CHECK(prf(0, 0, 4).recall == 0.0);
}

TEST_CASE("halve_document splits by sentence count, ceiling first") {
    ExerciseDocument four;
    four.id = "four";
    four.text = "Aa bb. Cc dd. Ee ff. Gg hh.";
    auto [f1, f2] = halve_document(four);
    CHECK(sentence_split(f1).size() == 2);
    CHECK(sentence_split(f2).size() == 2);

    ExerciseDocument five;
    five.id = "five";
    five.text = "Aa bb. Cc dd. Ee ff. Gg hh. Ii jj.";
    auto [g1, g2] = halve_document(five);
    CHECK(sentence_split(g1).size() == 3);
    CHECK(sentence_split(g2).size() == 2);

    ExerciseDocument one;
    one.id = "one";
    one.text = "Une seule phrase.";
    CHECK_THROWS_AS(halve_document(one), SingleSentence);
}

TEST_CASE("halve_document re-offsets gaps into their half") {
    ExerciseDocument doc = parse_marked_text("Aa bb. Cc [[dd]]. Ee ff. Gg [[hh]].", "h");
    auto [first, second] = halve_document(doc);
    REQUIRE(first.gaps.size() == 1);
    REQUIRE(second.gaps.size() == 1);
    CHECK(utf8_slice(first.text, first.gaps[0].start_char, first.gaps[0].end_char) == "dd");
    CHECK(utf8_slice(second.text, second.gaps[0].start_char, second.gaps[0].end_char) ==
          "hh");
    validate_document(first);
    validate_document(second);
}

TEST_CASE("binary_eval micro counts on a hand-built toy corpus") {
    Vocabulary vocab = Vocabulary::build(
        {"un cible ici deux la trois rien quatre fin aaa bon bbb mal seul"});
    KeywordStub stub(vocab, {}, "cible");

    std::vector<ExerciseDocument> corpus;
    corpus.push_back(parse_marked_text(
        "Un [[cible]] ici. Deux [[cible]] la. Trois rien ici. Quatre [[cible]] fin.",
        "d1"));
    corpus.push_back(parse_marked_text("Aaa cible [[bon]]. Bbb rien mal.", "d2"));
    corpus.push_back(parse_marked_text("Seul [[cible]] ici.", "d3"));

    // hand count, both directions:
    //   d1 forward  (input = sentences 3-4): TP 1
    //   d1 backward (input = sentences 1-2): TP 2
    //   d2 forward  (input = sentence 2): nothing predicted, nothing gold
    //   d2 backward (input = sentence 1): FP "cible", FN "bon"
    //   d3 is a singleton: skipped entirely
    EvalReport report = binary_eval(stub, corpus);
    CHECK(report.tp == 3);
    CHECK(report.fp == 1);
    CHECK(report.fn == 1);
    CHECK(report.precision == doctest::Approx(0.75));
    CHECK(report.recall == doctest::Approx(0.75));
    CHECK(report.f1 == doctest::Approx(0.75));
    CHECK(report.skipped_documents == 1);
    CHECK(report.skipped_gaps == 1);
    CHECK(!report.macro_f1.has_value());
}

TEST_CASE("binary_eval with a mute model counts every gold gap as a miss") {
    Vocabulary vocab = Vocabulary::build({"un cible ici deux la"});
    KeywordStub stub(vocab, {}, "absent");
    std::vector<ExerciseDocument> corpus;
    corpus.push_back(parse_marked_text("Un [[cible]] ici. Deux [[cible]] la.", "m1"));
    EvalReport report = binary_eval(stub, corpus);
    CHECK(report.tp == 0);
    CHECK(report.fp == 0);
    CHECK(report.fn == 2);
    CHECK(report.precision == 0.0);
    CHECK(report.recall == 0.0);
    CHECK(report.f1 == 0.0);
}

TEST_CASE("binary_eval dumps one prediction record per direction") {
    Vocabulary vocab = Vocabulary::build({"un cible ici deux la"});
    KeywordStub stub(vocab, {}, "cible");
    std::vector<ExerciseDocument> corpus;
    corpus.push_back(parse_marked_text("Un [[cible]] ici. Deux [[cible]] la.", "m1"));
    std::ostringstream dump;
    binary_eval(stub, corpus, &dump);
    const std::string text = dump.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("m1") != std::string::npos);
}

TEST_CASE("build_type_exemplars picks one homogeneous document per label") {
    std::vector<ExerciseDocument> corpus;
    auto typed = [](const std::string& id, const std::string& marked,
                    const std::string& type) {
        ExerciseDocument d = parse_marked_text(marked, id);
        for (auto& g : d.gaps) g.gap_type = type;
        return d;
    };
    corpus.push_back(typed("mix", "Un [[xa]] et [[xb]].", "A"));
    corpus.back().gaps[1].gap_type = "B";  // heterogeneous: not eligible
    corpus.push_back(typed("pure_a", "Voici [[xa]] fin.", "A"));
    corpus.push_back(typed("pure_b", "Voici [[xb]] fin.", "B"));

    auto sel = build_type_exemplars(corpus, {"A", "B", "C"});
    REQUIRE(sel.exemplars.size() == 3);
    CHECK(sel.exemplars[0].gap_type == "A");
    CHECK(sel.exemplars[0].marked_text.find("[[xa]]") != std::string::npos);
    CHECK(sel.exemplars[1].gap_type == "B");
    CHECK(sel.exemplars[2].marked_text.empty());  // no document carries C
    REQUIRE(sel.removed_ids.size() == 2);

    auto remaining = remove_documents(corpus, sel.removed_ids);
    REQUIRE(remaining.size() == 1);
    CHECK(remaining[0].id == "mix");
}

TEST_CASE("build_tense_exemplars covers all 12 tenses or fails loudly") {
    std::vector<ExerciseDocument> corpus;
    for (TenseLabel t : kAllTenses) {
        ExerciseDocument d =
            parse_marked_text("Il [[mot]] la.", "doc_" + tense_abbrev(t));
        d.gaps[0].gap_type = tense_abbrev(t);
        corpus.push_back(d);
    }
    auto sel = build_tense_exemplars(corpus);
    REQUIRE(sel.exemplars.size() == 12);
    std::set<std::string> seen;
    for (const auto& e : sel.exemplars) {
        CHECK(!e.marked_text.empty());
        seen.insert(e.gap_type);
    }
    CHECK(seen.size() == 12);

    corpus.pop_back();  // drop one tense entirely
    CHECK_THROWS_AS(build_tense_exemplars(corpus), MissingTense);
}

TEST_CASE("disentangle_eval macro averages over every exemplar label") {
    Vocabulary vocab = Vocabulary::build({"un xa xb voici fin"});
    KeywordStub stub(vocab, {{"A", "xa"}, {"B", "xb"}}, "absent");

    ExerciseDocument doc = parse_marked_text("Un [[xa]] [[xb]] fin.", "t1");
    doc.gaps[0].gap_type = "A";
    doc.gaps[1].gap_type = "B";

    std::vector<TypeExemplar> exemplars = {{"A", "Voici [[xa]] fin."},
                                           {"B", "Voici [[xb]] fin."},
                                           {"C", "Voici [[absent]] fin."}};
    EvalReport report = disentangle_eval(stub, {doc}, exemplars);
    REQUIRE(report.per_type.size() == 3);
    CHECK(report.per_type.at("A").tp == 1);
    CHECK(report.per_type.at("A").f1 == doctest::Approx(1.0));
    CHECK(report.per_type.at("A").support == 1);
    CHECK(report.per_type.at("B").tp == 1);
    CHECK(report.per_type.at("C").tp == 0);
    CHECK(report.per_type.at("C").support == 0);
    CHECK(report.per_type.at("C").f1 == 0.0);  // zero-support label still counted
    REQUIRE(report.macro_f1.has_value());
    CHECK(*report.macro_f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("disentangle_eval counts cross-type predictions as false positives") {
    Vocabulary vocab = Vocabulary::build({"un xa xb voici fin"});
    // this stub flags xa whatever the exemplar says
    KeywordStub stub(vocab, {}, "xa");
    ExerciseDocument doc = parse_marked_text("Un [[xa]] [[xb]] fin.", "t1");
    doc.gaps[0].gap_type = "A";
    doc.gaps[1].gap_type = "B";
    std::vector<TypeExemplar> exemplars = {{"A", "Voici [[xa]] fin."},
                                           {"B", "Voici [[xb]] fin."}};
    EvalReport report = disentangle_eval(stub, {doc}, exemplars);
    CHECK(report.per_type.at("A").tp == 1);
    CHECK(report.per_type.at("A").fp == 0);
    // prompted with the B exemplar, the model still marks xa: one FP, one miss
    CHECK(report.per_type.at("B").tp == 0);
    CHECK(report.per_type.at("B").fp == 1);
    CHECK(report.per_type.at("B").fn == 1);
}

TEST_CASE("report_to_json exposes counts, rates, and per-type rows") {
    EvalReport report;
    report.tp = 3;
    report.fp = 1;
    report.fn = 1;
    report.precision = 0.75;
    report.recall = 0.75;
    report.f1 = 0.75;
    report.per_type["IP"] = {2, 0, 0, 1.0, 1.0, 1.0, 2};
    report.macro_f1 = 0.5;
    auto j = report_to_json(report);
    CHECK(j.at("tp") == 3);
    CHECK(j.at("f1") == doctest::Approx(0.75));
    CHECK(j.at("macro_f1") == doctest::Approx(0.5));
    CHECK(j.at("per_type").at("IP").at("support") == 2);
}
