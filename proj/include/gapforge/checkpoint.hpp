#pragma once

#include <memory>
#include <string>

#include "gapforge/encoder.hpp"
#include "gapforge/evaluation.hpp"
#include "gapforge/model.hpp"

namespace gapforge {

inline constexpr const char* kModelBaseline = "baseline";
inline constexpr const char* kModelExampleAware = "example_aware";

// Encoder + span scorer + prediction threshold, persisted as a directory.
struct ModelCheckpoint {
    TinyEncoderD encoder;
    SpanScorer<double> scorer;
    std::string model_kind = kModelExampleAware;
    double threshold = 0.5;

    // Atomic: writes to a temp directory, then renames into place.
    void save(const std::string& dir) const;
    static ModelCheckpoint load(const std::string& dir);
};

// Bridges a trained checkpoint to the evaluation protocols. Inputs longer
// than the encoder limit are truncated from the right.
class ModelPredictor : public GapPredictor {
public:
    explicit ModelPredictor(const ModelCheckpoint& ckpt) : ckpt_(&ckpt) {}

    TokenizedText tokenize_input(const std::string& text) const override;
    std::vector<std::pair<Span, double>> score(
        const TokenizedText& input, const std::string& exemplar_marked) const override;
    int max_width() const override { return ckpt_->scorer.max_width(); }
    double threshold() const override { return ckpt_->threshold; }

private:
    const ModelCheckpoint* ckpt_;
};

}  // namespace gapforge
