#include "emo3d/error.hpp"

namespace emo3d {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NegativeMass: return "NegativeMass";
        case ErrorKind::ZeroMass: return "ZeroMass";
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::Backend: return "BackendError";
        case ErrorKind::Image: return "ImageError";
        case ErrorKind::EmptyBatch: return "EmptyBatch";
        case ErrorKind::Stratification: return "StratificationError";
        case ErrorKind::Parameter: return "ParameterError";
        case ErrorKind::Evaluation: return "EvaluationError";
        case ErrorKind::Divergence: return "DivergenceError";
        case ErrorKind::Data: return "DataError";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::State: return "StateError";
        case ErrorKind::Checkpoint: return "CheckpointError";
        case ErrorKind::Client: return "ClientError";
        case ErrorKind::Generation: return "GenerationError";
        case ErrorKind::NoFace: return "NoFaceError";
        case ErrorKind::Lookup: return "LookupError";
        case ErrorKind::EmptyClass: return "EmptyClassError";
        case ErrorKind::Pipeline: return "PipelineError";
        case ErrorKind::Render: return "RenderError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::Parameter:
            return 1;
        case ErrorKind::NegativeMass:
        case ErrorKind::ZeroMass:
        case ErrorKind::Parse:
        case ErrorKind::Validation:
        case ErrorKind::Data:
        case ErrorKind::Stratification:
        case ErrorKind::EmptyClass:
        case ErrorKind::Lookup:
        case ErrorKind::NoFace:
        case ErrorKind::Pipeline:
        case ErrorKind::Generation:
        case ErrorKind::Render:
        case ErrorKind::Io:
            return 2;
        case ErrorKind::Backend:
        case ErrorKind::Client:
        case ErrorKind::Config:
        case ErrorKind::Checkpoint:
        case ErrorKind::Image:
        case ErrorKind::State:
        case ErrorKind::ZeroNorm:
        case ErrorKind::EmptyBatch:
            return 3;
        case ErrorKind::Evaluation:
        case ErrorKind::Divergence:
            return 4;
    }
    return 1;
}

} // namespace emo3d
