#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexiport {

// Root of every error the library throws. `kind()` names the failing
// category so the CLI can report it without RTTI tricks.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define LEXIPORT_DEFINE_ERROR(Name, label)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(label, what) {}       \
    };

LEXIPORT_DEFINE_ERROR(StreamError, "stream error")
LEXIPORT_DEFINE_ERROR(InductionError, "induction error")
LEXIPORT_DEFINE_ERROR(CapacityError, "capacity error")
LEXIPORT_DEFINE_ERROR(ScreeningError, "screening error")
LEXIPORT_DEFINE_ERROR(VocabError, "vocabulary error")
LEXIPORT_DEFINE_ERROR(TrainingError, "training error")
LEXIPORT_DEFINE_ERROR(DegenerateQueryError, "degenerate query")
LEXIPORT_DEFINE_ERROR(EstimationError, "estimation error")
LEXIPORT_DEFINE_ERROR(AlignmentError, "alignment error")
LEXIPORT_DEFINE_ERROR(DimensionError, "dimension mismatch")
LEXIPORT_DEFINE_ERROR(TransplantError, "transplant error")
LEXIPORT_DEFINE_ERROR(ContractError, "contract violation")
LEXIPORT_DEFINE_ERROR(WriteError, "write error")
LEXIPORT_DEFINE_ERROR(ConfigError, "config error")

#undef LEXIPORT_DEFINE_ERROR

// Invalid UTF-8; carries the byte offset where the bad sequence starts.
class DecodeError : public Error {
public:
    DecodeError(std::size_t offset, const std::string& what)
        : Error("decode error", what + " at byte offset " + std::to_string(offset)),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Malformed input file; `line()` is 1-based, 0 when the problem is at EOF
// or not tied to a line.
class FormatError : public Error {
public:
    FormatError(std::string path, std::size_t line, const std::string& what)
        : Error("format error",
                path + (line ? ":" + std::to_string(line) : std::string(" (EOF)")) + ": " + what),
          path_(std::move(path)), line_(line) {}
    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

// A pipeline stage failed; wraps the underlying message with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed", what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace lexiport
