// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace videorepair {

/// Root of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. n_p = 0, d = 0).
class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class FileFormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Transport-level failure talking to a backend (connection refused, timeout, HTTP error status).
/// Carries the role and endpoint so operators can tell which binding broke.
class BackendError : public Error {
public:
    BackendError(std::string role, std::string endpoint, const std::string& what, std::string raw_body = {})
        : Error("backend " + role + " (" + endpoint + "): " + what),
          role_(std::move(role)),
          endpoint_(std::move(endpoint)),
          raw_body_(std::move(raw_body)) {}

    const std::string& role() const noexcept { return role_; }
    const std::string& endpoint() const noexcept { return endpoint_; }
    const std::string& raw_body() const noexcept { return raw_body_; }

private:
    std::string role_;
    std::string endpoint_;
    std::string raw_body_;
};

/// A reply (or request) that fails its wire schema. Never retried at the transport level.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class CycleError : public Error {
public:
    using Error::Error;
};

class EmptyPlanError : public Error {
public:
    using Error::Error;
};

class EmptyRemainderError : public Error {
public:
    using Error::Error;
};

class EmptyMaskError : public Error {
public:
    using Error::Error;
};

class EmptyListError : public Error {
public:
    using Error::Error;
};

/// Raised by the scripted mocks when no rule matches a request.
class UnscriptedRequestError : public Error {
public:
    UnscriptedRequestError(const std::string& endpoint, std::string fingerprint)
        : Error("unscripted request to " + endpoint + " (fingerprint " + fingerprint + ")"),
          fingerprint_(std::move(fingerprint)) {}

    const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

}  // namespace videorepair
