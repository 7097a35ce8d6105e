#pragma once

#include <stdexcept>
#include <string>

namespace m3kg {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Embedding or query length disagrees with the declared dimension.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Mutation of a finalized graph, or save of a graph still being built.
class GraphStateError : public Error {
public:
    using Error::Error;
};

/// Lookup of an identifier that does not exist.
class UnknownId : public Error {
public:
    using Error::Error;
};

/// A loaded graph failed validation.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// File content does not follow the expected record schema or version.
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Caller-supplied data violates a precondition (bad manifest line, empty text, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A backend could not be reached after all retries.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

/// A backend answered, but the answer violates the protocol or is unusable.
class BackendResponseError : public Error {
public:
    using Error::Error;
};

/// No index exists for the modality composition of a query.
class IndexMissing : public Error {
public:
    using Error::Error;
};

/// Configuration is inconsistent with the data it is applied to.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace m3kg
