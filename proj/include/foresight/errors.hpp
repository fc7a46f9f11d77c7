// Exception hierarchy shared by the whole library.
//
// config_error and parse-type failures are surfaced by the CLI as exit
// code 2, everything else as exit code 1.

#pragma once

#include <stdexcept>
#include <string>

namespace foresight {

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (bad dims, bad schedule endpoints, ...).
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Malformed input files (datasets, checkpoints, config files).
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Tensor/vector dimension mismatch.
class shape_error : public error {
public:
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Value outside an operation's domain (negative sigma, single-class AP, ...).
class domain_error : public error {
public:
    explicit domain_error(const std::string& msg) : error(msg) {}
};

// A frame whose object mask has no present object.
class empty_frame_error : public domain_error {
public:
    explicit empty_frame_error(const std::string& msg) : domain_error(msg) {}
};

// Non-finite values where finiteness is required (gradients, simplices).
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Filesystem failures, always carrying the offending path.
class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

} // namespace foresight
