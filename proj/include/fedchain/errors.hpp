#pragma once

#include <stdexcept>
#include <string>

namespace fedchain {

// Base class for every error this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

struct InvalidArgumentError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

// blobstore
struct StorageFullError : Error {
    using Error::Error;
};

// crypto
struct MessageTooLongError : Error {
    using Error::Error;
};
struct IntegrityError : Error {
    using Error::Error;
};

// ledger
struct DuplicateTxError : Error {
    using Error::Error;
};
struct BadNonceError : Error {
    using Error::Error;
};
struct NonceBudgetError : Error {
    using Error::Error;
};

// contract guard violations; mining catches these and marks the tx failed
struct ContractError : Error {
    using Error::Error;
};
struct InvalidAddressError : ContractError {
    using ContractError::ContractError;
};
struct EmptyPayloadError : ContractError {
    using ContractError::ContractError;
};
struct InsufficientBalanceError : ContractError {
    using ContractError::ContractError;
};
struct UnauthorizedMintError : ContractError {
    using ContractError::ContractError;
};
struct UnauthorizedPublisherError : ContractError {
    using ContractError::ContractError;
};

// dataset
struct DataError : Error {
    using Error::Error;
};

// model
struct DimensionError : Error {
    using Error::Error;
};
struct SerializationError : Error {
    using Error::Error;
};
struct TrainingError : Error {
    using Error::Error;
};

// orchestrator
struct RunError : Error {
    using Error::Error;
};
struct MissingArtifactError : Error {
    using Error::Error;
};

}  // namespace fedchain
