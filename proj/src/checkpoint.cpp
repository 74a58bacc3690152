#include "gapforge/checkpoint.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace gapforge {

void ModelCheckpoint::save(const std::string& dir) const {
    const fs::path target(dir);
    const fs::path tmp = target.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);

    encoder.save((tmp / "encoder").string());

    std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
    const_cast<SpanScorer<double>&>(scorer).visit_params(
        [&](const std::string& name, const auto& value, const auto&) {
            tensors.emplace_back(name, Eigen::MatrixXd(value));
        });
    write_tensor_blob((tmp / "scorer.bin").string(), tensors);

    nlohmann::json j;
    j["k"] = scorer.k();
    j["d_w"] = scorer.d_w();
    j["max_width"] = scorer.max_width();
    j["threshold"] = threshold;
    j["model_kind"] = model_kind;
    j["vocab_hash"] = encoder.vocab().hash();
    {
        std::ofstream out(tmp / "model.json");
        if (!out) throw IoFailure("cannot write model config: " + dir);
        out << j.dump(2) << "\n";
    }

    fs::remove_all(target, ec);
    fs::rename(tmp, target);
}

ModelCheckpoint ModelCheckpoint::load(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream in(root / "model.json");
    if (!in) throw IoFailure("cannot open model config: " + dir);
    nlohmann::json j;
    in >> j;

    TinyEncoderD encoder = TinyEncoderD::load((root / "encoder").string());
    const int k = j.at("k").get<int>();
    if (k != encoder.config().k)
        throw CheckpointMismatch("scorer k " + std::to_string(k) +
                                 " != encoder k " + std::to_string(encoder.config().k));
    if (j.at("vocab_hash").get<std::uint64_t>() != encoder.vocab().hash())
        throw CheckpointMismatch("vocab hash mismatch between model and encoder in " + dir);

    SpanScorer<double> scorer(k, j.at("d_w").get<int>(), j.at("max_width").get<int>(), 0);
    auto tensors = read_tensor_blob((root / "scorer.bin").string());
    scorer.visit_params([&](const std::string& name, auto& value, auto&) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw CheckpointMismatch("missing scorer tensor '" + name + "' in " + dir);
        if (it->second.rows() != value.rows() || it->second.cols() != value.cols())
            throw CheckpointMismatch("shape mismatch for scorer tensor '" + name + "'");
        value = it->second;
    });

    ModelCheckpoint ckpt{std::move(encoder), std::move(scorer),
                         j.at("model_kind").get<std::string>(),
                         j.at("threshold").get<double>()};
    return ckpt;
}

TokenizedText ModelPredictor::tokenize_input(const std::string& text) const {
    TokenizedText tok = tokenize(ckpt_->encoder.vocab(), text);
    const int limit = ckpt_->encoder.config().max_len - 1;
    if (tok.size() > limit) {
        tok.ids.resize(static_cast<std::size_t>(limit));
        tok.offsets.resize(static_cast<std::size_t>(limit));
    }
    return tok;
}

std::vector<std::pair<Span, double>> ModelPredictor::score(
    const TokenizedText& input, const std::string& exemplar_marked) const {
    std::vector<std::pair<Span, double>> out;
    if (input.size() == 0) return out;
    const auto enc = ckpt_->encoder.encode(input);
    const auto candidates = enumerate_spans(input.size(), ckpt_->scorer.max_width());
    std::optional<Eigen::VectorXd> hex;
    if (ckpt_->model_kind == kModelExampleAware && !exemplar_marked.empty())
        hex = encode_exemplar(exemplar_marked, ckpt_->encoder);
    for (const auto& s : score_spans(enc, ckpt_->scorer, candidates, hex ? &*hex : nullptr))
        out.emplace_back(s.span, s.probability);
    return out;
}

}  // namespace gapforge
