#pragma once

#include <stdexcept>
#include <string>

namespace exsclaim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (adapter files, pattern files, model hyperparameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A JSON document does not match its schema. `field()` names the offending path.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class RangeError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace exsclaim
