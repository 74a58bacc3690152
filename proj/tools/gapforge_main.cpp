#include <iostream>

#include "CLI11.hpp"
#include "gapforge/cli.hpp"

using namespace gapforge;

int main(int argc, char** argv) {
    CLI::App app{"gapforge - turn plain text into gap-filling grammar exercises "
                 "by imitating an example exercise"};
    app.require_subcommand(1);

    std::string config_path;
    cli::Overrides overrides;
    int workers = 1;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", overrides.seed, "random seed");
    app.add_option("--workers", workers, "worker count (evaluation)");
    app.add_option("--threshold", overrides.threshold, "prediction threshold");
    app.add_option("--max-width", overrides.max_width, "maximum span width in tokens");
    app.add_option("--model", overrides.model, "model kind")
        ->check(CLI::IsMember({"baseline", "example_aware"}));
    app.add_option("--lr", overrides.learning_rate, "learning rate");
    app.add_option("--epochs", overrides.epochs, "training epochs");
    app.add_option("--k", overrides.k, "encoder hidden dimension");
    app.add_option("--neg-ratio", overrides.neg_ratio, "negative:positive pair ratio");

    auto* prepare = app.add_subcommand("prepare", "clean raw files into a JSONL corpus");
    prepare->fallthrough();
    std::string raw_dir, out_corpus;
    prepare->add_option("raw_dir", raw_dir, "directory of marker-text or JSONL files")
        ->required();
    prepare->add_option("out_corpus", out_corpus, "output corpus path")->required();

    auto* train = app.add_subcommand("train", "train a span-detection model");
    train->fallthrough();
    std::string corpus_path, out_dir;
    train->add_option("corpus", corpus_path, "corpus JSONL")->required();
    train->add_option("out_dir", out_dir, "output directory")->required();

    auto* tune = app.add_subcommand("tune", "grid-search the negative ratio on dev macro F1");
    tune->fallthrough();
    tune->add_option("corpus", corpus_path, "corpus JSONL")->required();
    tune->add_option("out_dir", out_dir, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->fallthrough();
    std::string checkpoint_dir, protocol = "binary", out_report;
    eval->add_option("checkpoint", checkpoint_dir, "checkpoint directory")->required();
    eval->add_option("corpus", corpus_path, "corpus JSONL")->required();
    eval->add_option("--protocol", protocol, "binary|disentangle")
        ->check(CLI::IsMember({"binary", "disentangle"}));
    eval->add_option("--out", out_report, "report path")->required();

    auto* generate = app.add_subcommand("generate", "create a new exercise from plain text");
    generate->fallthrough();
    std::string exemplar_file, input_file, gen_out, format = "markers";
    bool with_scores = false;
    generate->add_option("checkpoint", checkpoint_dir, "checkpoint directory")->required();
    generate->add_option("exemplar", exemplar_file, "marker-text exemplar file")->required();
    generate->add_option("input", input_file, "plain-text input file")->required();
    generate->add_option("out", gen_out, "output file")->required();
    generate->add_option("--format", format, "markers|blanks")
        ->check(CLI::IsMember({"markers", "blanks"}));
    generate->add_flag("--scores", with_scores, "dump span probabilities alongside");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // collapse CLI11's varied parse-error codes onto the usage-error exit
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const TrainConfig config = cli::resolve_config(config_path, overrides);
        const std::string model_kind = cli::resolve_model_kind(config_path, overrides);
        if (prepare->parsed()) cli::run_prepare(raw_dir, out_corpus, config.seed);
        if (train->parsed()) cli::run_train(corpus_path, config, model_kind, out_dir);
        if (tune->parsed()) cli::run_tune(corpus_path, config, out_dir);
        if (eval->parsed()) cli::run_eval(checkpoint_dir, corpus_path, protocol, out_report);
        if (generate->parsed())
            cli::run_generate(checkpoint_dir, exemplar_file, input_file, gen_out, format,
                              with_scores);
    } catch (const SchemaViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CheckpointMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UnbalancedMarkers& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NestedMarkers& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyGap& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyCorpus& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MissingTense& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NoAnnotatedDev& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
