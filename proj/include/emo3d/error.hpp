#pragma once

#include <stdexcept>
#include <string>

namespace emo3d {

// One kind per failure class named in the module contracts. The CLI maps
// kinds onto process exit codes (see exit_code_for).
enum class ErrorKind {
    NegativeMass,
    ZeroMass,
    ZeroNorm,
    Parse,
    Validation,
    Backend,
    Image,
    EmptyBatch,
    Stratification,
    Parameter,
    Evaluation,
    Divergence,
    Data,
    Config,
    State,
    Checkpoint,
    Client,
    Generation,
    NoFace,
    Lookup,
    EmptyClass,
    Pipeline,
    Render,
    Io,
    Usage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Exit code classes: 1 usage, 2 data, 3 backend, 4 evaluation.
int exit_code_for(ErrorKind kind);

} // namespace emo3d
