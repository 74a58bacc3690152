#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gapforge/spans.hpp"

namespace gapforge {

// Token inventory with reserved sequence-start, unknown, and gap-marker
// tokens. The markers "[[" / "]]" are atomic: the tokenizer emits them as
// single ids and never splits them.
class Vocabulary {
public:
    static constexpr const char* kCls = "<s>";
    static constexpr const char* kUnk = "<unk>";
    static constexpr const char* kOpen = "[[";
    static constexpr const char* kClose = "]]";

    Vocabulary();

    int add(const std::string& token);           // returns id, existing or new
    int id(const std::string& token) const;      // -1 if absent
    const std::string& token(int id) const;
    std::size_t size() const { return tokens_.size(); }

    int cls_id() const { return cls_id_; }
    int unk_id() const { return unk_id_; }
    int open_id() const { return open_id_; }
    int close_id() const { return close_id_; }

    // FNV-1a over the ordered token list; checkpoint compatibility key.
    std::uint64_t hash() const;

    static Vocabulary build(const std::vector<std::string>& texts);

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int cls_id_, unk_id_, open_id_, close_id_;
};

// Word tokenizer: letter/digit runs form words (apostrophe closes a word,
// French-style "l'" + "homme"); any other non-space character is its own
// token; "[[" and "]]" are atomic marker tokens. Offsets are codepoint
// intervals into the input. Out-of-vocabulary words map to <unk>.
TokenizedText tokenize(const Vocabulary& vocab, const std::string& text);

// Surface forms only, no vocabulary lookup (used when building one).
std::vector<std::string> tokenize_words(const std::string& text);

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace gapforge
