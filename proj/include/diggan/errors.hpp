#pragma once

#include <stdexcept>
#include <string>

namespace diggan {

// Base of every error the library throws. `kind()` is the stable class name
// reported by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define DIGGAN_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    }

// gei_pipeline
DIGGAN_DEFINE_ERROR(MissingDirectoryError);
DIGGAN_DEFINE_ERROR(EmptySequenceError);
DIGGAN_DEFINE_ERROR(DimensionMismatchError);
DIGGAN_DEFINE_ERROR(EmptySilhouetteError);
DIGGAN_DEFINE_ERROR(ImageFormatError);

// dataset / synth
DIGGAN_DEFINE_ERROR(LayoutError);
DIGGAN_DEFINE_ERROR(EmptyDatasetError);
DIGGAN_DEFINE_ERROR(UnwritablePathError);
DIGGAN_DEFINE_ERROR(InvalidArgumentError);

// losses / network / trainer
DIGGAN_DEFINE_ERROR(LossDomainError);
DIGGAN_DEFINE_ERROR(NonFiniteError);
DIGGAN_DEFINE_ERROR(StageOrderError);
DIGGAN_DEFINE_ERROR(ArchitectureMismatchError);
DIGGAN_DEFINE_ERROR(CheckpointVersionError);
DIGGAN_DEFINE_ERROR(CorruptCheckpointError);

// evaluator / evidence
DIGGAN_DEFINE_ERROR(CoverageError);
DIGGAN_DEFINE_ERROR(UnknownViewError);

// cli
DIGGAN_DEFINE_ERROR(ConfigError);

#undef DIGGAN_DEFINE_ERROR

}  // namespace diggan
