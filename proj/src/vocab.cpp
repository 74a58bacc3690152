#include "gapforge/vocab.hpp"

#include <fstream>

#include "gapforge/errors.hpp"
#include "gapforge/unicode.hpp"

namespace gapforge {

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
    std::uint64_t h = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

Vocabulary::Vocabulary() {
    cls_id_ = add(kCls);
    unk_id_ = add(kUnk);
    open_id_ = add(kOpen);
    close_id_ = add(kClose);
}

int Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token(int id) const {
    return tokens_.at(static_cast<std::size_t>(id));
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens_) {
        h = fnv1a64(t.data(), t.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
    Vocabulary vocab;
    for (const auto& text : texts)
        for (const auto& w : tokenize_words(text)) vocab.add(w);
    return vocab;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write vocab file: " + path);
    for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open vocab file: " + path);
    Vocabulary vocab;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) vocab.add(line);
    return vocab;
}

namespace {

struct RawToken {
    std::string surface;
    std::size_t begin, end;  // codepoints
};

std::vector<RawToken> scan(const std::string& text) {
    const std::u32string cps = utf8_decode(text);
    std::vector<RawToken> out;
    std::size_t i = 0;
    const std::size_t n = cps.size();
    auto emit = [&](std::size_t b, std::size_t e) {
        out.push_back({utf8_encode(std::u32string_view(cps).substr(b, e - b)), b, e});
    };
    while (i < n) {
        char32_t c = cps[i];
        if (is_space_cp(c)) {
            ++i;
        } else if (i + 1 < n && ((c == U'[' && cps[i + 1] == U'[') ||
                                 (c == U']' && cps[i + 1] == U']'))) {
            emit(i, i + 2);
            i += 2;
        } else if (is_letter_cp(c) || is_digit_cp(c)) {
            std::size_t b = i;
            while (i < n && (is_letter_cp(cps[i]) || is_digit_cp(cps[i]))) ++i;
            if (i < n && (cps[i] == U'\'' || cps[i] == 0x2019)) ++i;  // elision: l', j', qu'
            emit(b, i);
        } else {
            emit(i, i + 1);
            ++i;
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> out;
    for (auto& t : scan(text)) out.push_back(std::move(t.surface));
    return out;
}

TokenizedText tokenize(const Vocabulary& vocab, const std::string& text) {
    TokenizedText tok;
    for (const auto& t : scan(text)) {
        int id = vocab.id(t.surface);
        tok.ids.push_back(id < 0 ? vocab.unk_id() : id);
        tok.offsets.emplace_back(t.begin, t.end);
    }
    return tok;
}

}  // namespace gapforge
