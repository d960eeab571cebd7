#pragma once

#include <stdexcept>
#include <string>

namespace funnelpac {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kSoundnessFailure = 2,
    kContractViolation = 3,
    kStaleArtifact = 4,
    kRuntime = 5,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ExitCode code = ExitCode::kRuntime)
        : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

/// Non-finite or malformed state/control values.
class InvalidStateError : public Error {
public:
    explicit InvalidStateError(const std::string& what) : Error(what, ExitCode::kContractViolation) {}
};

/// A reachability step could not be certified; no unsound funnel is ever returned.
class SoundnessError : public Error {
public:
    explicit SoundnessError(const std::string& what) : Error(what, ExitCode::kSoundnessFailure) {}
};

/// An enclosure left the declared working box.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(what, ExitCode::kSoundnessFailure) {}
};

/// A caller broke an operation's precondition (e.g. uncertified composition).
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& what) : Error(what, ExitCode::kContractViolation) {}
};

/// An upstream artifact no longer matches the hash recorded by its consumer.
class StaleArtifactError : public Error {
public:
    explicit StaleArtifactError(const std::string& what) : Error(what, ExitCode::kStaleArtifact) {}
};

class NoComposablePrimitiveError : public Error {
public:
    explicit NoComposablePrimitiveError(const std::string& what) : Error(what, ExitCode::kContractViolation) {}
};

}  // namespace funnelpac
