#pragma once

#include <stdexcept>
#include <string>

namespace oksym {

// Malformed input files or inconsistent on-disk data.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Generator sets that fail the structural group checks.
struct InvalidGroup : std::runtime_error {
    explicit InvalidGroup(const std::string& what) : std::runtime_error(what) {}
};

// Stored artifacts whose cross-checks (hashes, recomputation) fail.
struct IntegrityError : std::runtime_error {
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative schemes that leave the feasible region or exhaust their budget.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Linear systems whose numerical solve is untrustworthy.
struct SingularError : std::runtime_error {
    explicit SingularError(const std::string& what) : std::runtime_error(what) {}
};

// Certified routines invoked outside their stated validity region.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Continuation that cannot produce even a first step.
struct BranchEndError : std::runtime_error {
    explicit BranchEndError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oksym
