#pragma once

#include <stdexcept>
#include <string>

namespace haarfactor {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain (predecessor of [0,1), empty collection, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Function/functional role mismatch.
struct RoleError : Error {
    explicit RoleError(const std::string& what) : Error(what) {}
};

// A resource or resolution cap was reached (level 62, N_max, triple-count cap, net size).
struct CapError : Error {
    explicit CapError(const std::string& what) : Error(what) {}
};

// A stated hypothesis of a theorem/lemma is violated by the inputs.
struct HypothesisError : Error {
    explicit HypothesisError(const std::string& what) : Error(what) {}
};

// The construction degenerated (empty W, empty block, singular solve).
struct DegeneracyError : Error {
    explicit DegeneracyError(const std::string& what) : Error(what) {}
};

// Structurally inconsistent inputs (block dimensions, resolutions).
struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace haarfactor
