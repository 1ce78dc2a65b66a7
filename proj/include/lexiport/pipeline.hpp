#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexiport/embed_trainer.hpp"
#include "lexiport/transplant.hpp"
#include "lexiport/wordpiece.hpp"

namespace lexiport {

struct PipelinePaths {
    std::filesystem::path target_corpus;
    std::filesystem::path source_corpus;   // train source vectors here, or
    std::filesystem::path source_vectors;  // import a .vec (takes precedence)
    std::filesystem::path target_vectors;  // optional import instead of training
    std::filesystem::path base_vocab;
    std::filesystem::path base_matrix;
    std::filesystem::path mono_vocab;
    std::filesystem::path lexicon;
    std::filesystem::path output_dir;
};

struct PipelineConfig {
    PipelinePaths paths;
    std::size_t vocab_size = kDefaultVocabSize;
    std::size_t vocab_min_frequency = 1;
    std::optional<std::size_t> subsample;
    bool lowercase = false;
    TrainerConfig trainer;
    TransplantConfig transplant;
    bool normalize_before_align = false;
    bool ngram_mean = false;
    bool ngram_markers = true;
    std::uint64_t seed = 1;

    // Range checks and required-path presence. Existence of input files is
    // checked by the stage that reads them.
    void validate() const;
    nlohmann::json to_json() const;
};

// Dotted config key ("transplant.tau") -> textual value.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Nested key-value YAML (JSON is accepted too). Unknown keys and type
// mismatches are ConfigErrors naming the offending key path. Relative paths
// in a file resolve against the file's directory; override paths stay as
// given.
PipelineConfig parse_config(const std::optional<std::filesystem::path>& file,
                            const ConfigOverrides& overrides = {});
PipelineConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides = {},
                                 const std::filesystem::path& base_dir = {});

// Kebab-case CLI flag ("--vocab-size") for each config key, in one table.
const std::vector<std::pair<std::string, std::string>>& config_flag_table();

struct RunOptions {
    bool force = false;
};

struct RunReport {
    std::vector<std::string> executed;
    std::vector<std::string> cached;
    bool up_to_date() const noexcept { return executed.empty(); }
};

// Screen -> induce -> embeddings -> align -> tables -> transplant -> export.
// Each stage is cached under output_dir/stages/<name> keyed by a digest of
// its inputs and parameters. Errors surface as StageError.
RunReport run_pipeline(const PipelineConfig& config, const RunOptions& options, std::ostream& log);

// Exclusive marker file in the output directory, removed on destruction.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

// Digest of a file, or of every file (name and content) in a directory.
std::string digest_path(const std::filesystem::path& path);

}  // namespace lexiport
