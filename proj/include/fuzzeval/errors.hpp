#pragma once

#include <stdexcept>
#include <string>

namespace fuzzeval {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A crash-analysis transcript contains an error/classifier block that cannot
// be decoded (e.g. an error header with no extractable stack frame).
struct MalformedReport : Error {
    using Error::Error;
};

// Structured input file (CVE database, alias table, campaign config) violates
// its schema; message carries line/record context.
struct SchemaError : Error {
    using Error::Error;
};

// No stack frame survives the triage blocklist.
struct EmptyTrace : Error {
    using Error::Error;
};

// No analysis tool observed a crash for this sample.
struct NotValidated : Error {
    using Error::Error;
};

// A crash sample lacks the outcome of a tool required by the operation.
struct MissingOutcome : Error {
    using Error::Error;
};

struct AlreadyConfirmed : Error {
    using Error::Error;
};

struct DegenerateSample : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

struct UnknownFuzzer : Error {
    using Error::Error;
};

struct UnknownTarget : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct LaunchFailure : Error {
    using Error::Error;
};

struct CampaignLocked : Error {
    using Error::Error;
};

}  // namespace fuzzeval
