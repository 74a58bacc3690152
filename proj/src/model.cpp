#include "gapforge/model.hpp"

#include "gapforge/corpus.hpp"

namespace gapforge {

TokenizedText exemplar_tokens(const std::string& marked, const Vocabulary& vocab,
                              int max_len) {
    // validates marker balance as a side effect
    const ExerciseDocument doc = parse_marked_text(marked, "exemplar");

    TokenizedText tok = tokenize(vocab, marked);
    if (tok.size() + 1 <= max_len) return tok;

    // drop whole trailing sentences first
    const auto sents = sentence_split(doc);
    for (std::size_t keep = sents.size() > 0 ? sents.size() - 1 : 0; keep >= 1; --keep) {
        std::string joined;
        for (std::size_t i = 0; i < keep; ++i) {
            if (i > 0) joined += " ";
            joined += render_marked_text(sents[i]);
        }
        TokenizedText t = tokenize(vocab, joined);
        if (t.size() + 1 <= max_len) return t;
    }

    // single overlong sentence: hard truncate, then restore marker balance
    tok.ids.resize(static_cast<std::size_t>(max_len - 1));
    tok.offsets.resize(static_cast<std::size_t>(max_len - 1));
    const int open = vocab.open_id();
    const int close = vocab.close_id();
    auto balanced = [&] {
        int depth = 0;
        for (int id : tok.ids) {
            if (id == open) ++depth;
            if (id == close) --depth;
        }
        return depth == 0;
    };
    while (!tok.ids.empty() && !balanced()) {
        tok.ids.pop_back();
        tok.offsets.pop_back();
    }
    return tok;
}

}  // namespace gapforge
