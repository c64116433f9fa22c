#pragma once
#include <stdexcept>
#include <string>

namespace miurex {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter outside its admissible range, or a derived quantity degenerates
// (L = 0, cos(rho/2) = 0, zero-length extrusion seed vector, ...).
struct DegenerateParameterError : Error {
    using Error::Error;
};

// The horizontal-direction oracle found no root: the parameters admit no
// face-bondable extrusion at this vertex.
struct NoValidDirectionError : Error {
    using Error::Error;
};

// A vertex fails the 2*pi sector-sum condition; carries the worst offender.
struct NonDevelopableError : Error {
    int vertex;
    double defect;
    NonDevelopableError(int v, double d, const std::string& msg)
        : Error(msg), vertex(v), defect(d) {}
};

// Path continuation could not reach the requested fold angle.
struct ContinuationError : Error {
    double last_good_phi;
    ContinuationError(double phi, const std::string& msg)
        : Error(msg), last_good_phi(phi) {}
};

// No state labeled "final" exists on the traced path (parameters outside the
// admissible range for a blocked final state).
struct MissingFinalStateError : Error {
    using Error::Error;
};

// Final-state mesh does not decompose into edge-sharing skin columns.
struct MalformedStateError : Error {
    using Error::Error;
};

// Root bracket endpoints do not straddle zero.
struct NoBracketError : Error {
    using Error::Error;
};

// A nested build/simulate/measure evaluation threw while root-finding.
struct PipelineError : Error {
    using Error::Error;
};

// Configuration / CLI usage problems (exit code 2 territory).
struct UsageError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace miurex
