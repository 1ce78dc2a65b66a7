// Command-line front end: the full pipeline (`run`) plus one subcommand per
// stage and `inspect` for per-token provenance.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexiport/align.hpp"
#include "lexiport/corpus_io.hpp"
#include "lexiport/embed_io.hpp"
#include "lexiport/embed_trainer.hpp"
#include "lexiport/error.hpp"
#include "lexiport/pipeline.hpp"
#include "lexiport/synth.hpp"
#include "lexiport/transplant.hpp"
#include "lexiport/version.hpp"
#include "lexiport/wordpiece.hpp"

namespace fs = std::filesystem;
using namespace lexiport;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

struct RunArgs {
    std::string config;
    std::string manifest;
    bool force = false;
    std::vector<std::pair<std::string, std::string>> flag_values;  // key, value
};

bool is_bool_key(const std::string& key) {
    return key == "vocab.lowercase" || key.starts_with("flags.");
}

void add_trainer_options(CLI::App* cmd, TrainerConfig& t) {
    cmd->add_option("--dim", t.dim, "Embedding dimension")->capture_default_str();
    cmd->add_option("--epochs", t.epochs)->capture_default_str();
    cmd->add_option("--negatives", t.negatives)->capture_default_str();
    cmd->add_option("--window", t.window)->capture_default_str();
    cmd->add_option("--min-count", t.min_count)->capture_default_str();
    cmd->add_option("--lr", t.initial_lr)->capture_default_str();
    cmd->add_option("--bucket-count", t.bucket_count)->capture_default_str();
    cmd->add_option("--n-min", t.n_min)->capture_default_str();
    cmd->add_option("--n-max", t.n_max)->capture_default_str();
    cmd->add_option("--seed", t.seed)->capture_default_str();
    cmd->add_option("--workers", t.workers)->capture_default_str();
}

struct VectorsHandle {
    std::optional<EmbeddingModel> model;
    std::optional<VectorTable> table;
    const VectorLookup& get() const {
        return model ? static_cast<const VectorLookup&>(*model) : *table;
    }
};

VectorsHandle open_vectors(const std::string& path) {
    VectorsHandle h;
    if (is_model_file(path))
        h.model = load_model(path);
    else
        h.table = load_vec(path);
    return h;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

int inspect(const std::string& dir, const std::string& token) {
    const auto result = load_result(dir);
    const auto id = result.merged_vocab.id_of(token);
    if (!id) {
        std::cout << token << ": not in the merged vocabulary\n";
        return kExitFailure;
    }
    for (const auto& r : result.provenance) {
        if (r.token != token) continue;
        std::cout << token << " (id " << r.id << "): " << to_string(r.kind) << '\n';
        for (const auto& n : r.neighbors)
            std::cout << "  " << n.source_token << "\tsim=" << n.similarity << "\tweight=" << n.weight
                      << '\n';
        return 0;
    }
    std::cout << token << " (id " << *id << "): base token, row copied unchanged\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vocabulary expansion with similarity-weighted embedding transplant"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // run
    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run the whole pipeline from a config file");
    run_cmd->add_option("--config", run.config, "YAML config file");
    run_cmd->add_option("--manifest", run.manifest, "Replay the config recorded in a manifest.json");
    run_cmd->add_flag("--force", run.force, "Re-run every stage");
    std::vector<std::pair<std::string, std::string>> flag_storage;
    flag_storage.reserve(config_flag_table().size());
    std::vector<CLI::Option*> flag_opts;
    for (const auto& [key, flag] : config_flag_table()) {
        flag_storage.emplace_back(key, "");
        auto* opt = run_cmd->add_option(flag, flag_storage.back().second, "Overrides '" + key + "'");
        if (is_bool_key(key)) opt->expected(0, 1);
        flag_opts.push_back(opt);
    }

    // induce-vocab
    std::string iv_corpus, iv_out;
    WordPieceConfig iv_cfg;
    bool iv_lower = false;
    auto* iv = app.add_subcommand("induce-vocab", "Induce a WordPiece vocabulary from a corpus");
    iv->add_option("--corpus", iv_corpus)->required();
    iv->add_option("--size", iv_cfg.target_size)->capture_default_str();
    iv->add_option("--min-frequency", iv_cfg.min_frequency)->capture_default_str();
    iv->add_flag("--lowercase", iv_lower);
    iv->add_option("--out", iv_out, "vocab.txt to write")->required();

    // screen
    std::string sc_mono, sc_base, sc_matrix, sc_out;
    std::optional<std::size_t> sc_subsample;
    std::uint64_t sc_seed = 1;
    auto* sc = app.add_subcommand("screen", "Intersect a monolingual vocabulary with the base vocabulary");
    sc->add_option("--mono-vocab", sc_mono)->required();
    sc->add_option("--base-vocab", sc_base)->required();
    sc->add_option("--base-matrix", sc_matrix)->required();
    sc->add_option("--subsample", sc_subsample);
    sc->add_option("--seed", sc_seed)->capture_default_str();
    sc->add_option("--out", sc_out, "Screened tokens, one per line")->required();

    // train-embeddings
    std::string te_corpus, te_out, te_vec;
    TrainerConfig te_cfg;
    auto* te = app.add_subcommand("train-embeddings", "Train subword CBOW embeddings");
    te->add_option("--corpus", te_corpus)->required();
    te->add_option("--out", te_out, "Binary model dump")->required();
    te->add_option("--vec-out", te_vec, "Also export word vectors as .vec");
    add_trainer_options(te, te_cfg);

    // align
    std::string al_lex, al_src, al_tgt, al_map, al_mapped;
    bool al_norm = false;
    auto* al = app.add_subcommand("align", "Fit the orthogonal map target -> source");
    al->add_option("--lexicon", al_lex)->required();
    al->add_option("--source", al_src, "Source model dump or .vec")->required();
    al->add_option("--target", al_tgt, "Target model dump or .vec")->required();
    al->add_option("--out-map", al_map, "Map matrix (.bin + .json sidecar)")->required();
    al->add_option("--mapped-out", al_mapped, "Mapped target (same format as --target)");
    al->add_flag("--normalize-before-align", al_norm);

    // build-tables
    std::string bt_vocab, bt_tokens, bt_model, bt_out;
    SynthConfig bt_cfg;
    auto* bt = app.add_subcommand("build-tables", "Build the static vocabulary table for a vocabulary");
    auto* bt_v = bt->add_option("--vocab", bt_vocab, "vocab.txt (specials masked)");
    bt->add_option("--tokens", bt_tokens, "Plain token list, e.g. screened source tokens")->excludes(bt_v);
    bt->add_option("--model", bt_model, "Model dump or .vec")->required();
    bt->add_option("--out", bt_out, ".vec output")->required();
    bt->add_option("--n-min", bt_cfg.n_min)->capture_default_str();
    bt->add_option("--n-max", bt_cfg.n_max)->capture_default_str();
    bt->add_option("--ngram-markers", bt_cfg.markers)->capture_default_str();
    bt->add_flag("--ngram-mean", bt_cfg.ngram_mean);

    // transplant
    std::string tp_base_vocab, tp_base_matrix, tp_tokens, tp_us, tp_ut, tp_vocab, tp_out;
    TransplantConfig tp_cfg;
    auto* tp = app.add_subcommand("transplant", "Initialise appended rows from the static tables");
    tp->add_option("--base-vocab", tp_base_vocab)->required();
    tp->add_option("--base-matrix", tp_base_matrix)->required();
    tp->add_option("--source-tokens", tp_tokens, "Screened tokens from `screen`")->required();
    tp->add_option("--source-table", tp_us)->required();
    tp->add_option("--target-table", tp_ut)->required();
    tp->add_option("--target-vocab", tp_vocab)->required();
    tp->add_option("--k", tp_cfg.k)->capture_default_str();
    tp->add_option("--tau", tp_cfg.tau)->capture_default_str();
    tp->add_option("--seed", tp_cfg.seed)->capture_default_str();
    tp->add_option("--out-dir", tp_out)->required();

    // inspect
    std::string in_dir, in_token;
    auto* ins = app.add_subcommand("inspect", "Print a token's provenance and neighbours");
    ins->add_option("--result", in_dir, "Output directory of a run")->required();
    ins->add_option("--token", in_token)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    // Config errors are usage errors; everything else is a failure.
    try {
        if (*run_cmd) {
            ConfigOverrides overrides;
            for (std::size_t i = 0; i < flag_opts.size(); ++i) {
                if (flag_opts[i]->count() == 0) continue;
                auto value = flag_storage[i].second;
                if (value.empty() && is_bool_key(flag_storage[i].first)) value = "true";
                overrides.emplace_back(flag_storage[i].first, value);
            }
            PipelineConfig cfg;
            if (!run.manifest.empty()) {
                std::ifstream in(run.manifest, std::ios::binary);
                if (!in) throw ConfigError("cannot open manifest " + run.manifest);
                nlohmann::json m;
                try {
                    m = nlohmann::json::parse(in);
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(std::string("bad manifest: ") + e.what());
                }
                if (!m.contains("config")) throw ConfigError("manifest has no 'config' section");
                cfg = parse_config_text(m["config"].dump(), overrides);
            } else {
                cfg = parse_config(run.config.empty() ? std::nullopt : std::optional<fs::path>(run.config),
                                   overrides);
            }
            cfg.validate();
            RunOptions opts;
            opts.force = run.force;
            run_pipeline(cfg, opts, std::cout);
            return 0;
        }
        if (*iv) {
            NormalizationConfig norm;
            norm.lowercase = iv_lower;
            const auto vocab = induce_wordpiece_vocab(read_tokens(iv_corpus, norm), iv_cfg);
            save_vocab_txt(vocab, iv_out);
            std::cout << "wrote " << vocab.size() << " tokens to " << iv_out << '\n';
            return 0;
        }
        if (*sc) {
            const auto set = screen_source_vocab(load_vocab_txt(sc_mono), load_vocab_txt(sc_base),
                                                 load_matrix(sc_matrix), sc_subsample, sc_seed);
            std::ofstream out(sc_out, std::ios::binary | std::ios::trunc);
            for (const auto& t : set.tokens) out << t << '\n';
            if (!out.flush()) throw WriteError("cannot write " + sc_out);
            std::cout << "screened " << set.tokens.size() << " tokens\n";
            return 0;
        }
        if (*te) {
            CorpusStream stream(te_corpus);
            const auto model = train_cbow_subword(stream, te_cfg);
            save_model(model, te_out);
            if (!te_vec.empty()) save_vec(model.to_table(), te_vec);
            std::cout << "trained " << model.words().size() << " words; epoch losses";
            for (double l : model.epoch_losses()) std::cout << ' ' << l;
            std::cout << '\n';
            return 0;
        }
        if (*al) {
            const auto source = open_vectors(al_src);
            auto target = open_vectors(al_tgt);
            AlignOptions opts;
            opts.normalize_before_align = al_norm;
            const auto map = fit_alignment(parse_lexicon(al_lex), source.get(), target.get(), opts);
            for (const auto& w : map.fit_stats.warnings) std::cerr << "warning: " << w << '\n';
            save_map(map, al_map);
            if (!al_mapped.empty()) {
                if (target.model)
                    save_model(apply_map(map, std::move(*target.model)), al_mapped);
                else
                    save_vec(apply_map(map, std::move(*target.table)), al_mapped);
            }
            std::cout << "pairs " << map.fit_stats.pair_count << ", residual " << map.fit_stats.residual
                      << '\n';
            return 0;
        }
        if (*bt) {
            const auto model = open_vectors(bt_model);
            const auto table = bt_vocab.empty()
                                   ? build_table(read_lines(bt_tokens), model.get(), bt_cfg)
                                   : build_table(load_vocab_txt(bt_vocab), model.get(), bt_cfg);
            save_table(table, bt_out);
            std::cout << table.live_count() << "/" << table.size() << " rows non-zero\n";
            return 0;
        }
        if (*tp) {
            const auto base_vocab = load_vocab_txt(tp_base_vocab);
            const auto base_matrix = load_matrix(tp_base_matrix);
            SourceVocabSet set;
            set.rows = Matrix(0, base_matrix.cols());
            for (const auto& t : read_lines(tp_tokens)) {
                const auto id = base_vocab.id_of(t);
                if (!id) throw ContractError("source token '" + t + "' not in base vocabulary");
                set.tokens.push_back(t);
                set.base_ids.push_back(*id);
                set.rows.append_row(base_matrix.row(*id));
            }
            auto result = run_transplant(base_vocab, base_matrix, set, load_table(tp_us), load_table(tp_ut),
                                         load_vocab_txt(tp_vocab), tp_cfg);
            export_result(result, tp_out);
            std::cout << "appended " << result.provenance.size() << " tokens\n";
            return 0;
        }
        if (*ins) return inspect(in_dir, in_token);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
