#pragma once

#include <stdexcept>
#include <string>

namespace chal {

/// Base class for every exception thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File system or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Resource registry could not be loaded (missing key, malformed file, scale gap).
class RegistryError : public Error {
public:
    using Error::Error;
};

/// Scripted scenario lookup failed or the scenario file is malformed.
class ScenarioError : public Error {
public:
    using Error::Error;
};

/// An agent or adjudicator backend failed after exhausting its retries.
class BackendError : public Error {
public:
    using Error::Error;
};

/// A partial run directory cannot be resumed.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace chal
