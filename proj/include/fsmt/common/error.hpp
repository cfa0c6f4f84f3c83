/*
 * Copyright 2026 The fsmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsmt {

// Process exit codes used by the CLI: 0 success, 1 usage/config,
// 2 data, 3 numerical.
enum class ExitCode : int {
    Ok = 0,
    Config = 1,
    Data = 2,
    Numerical = 3,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ExitCode::Config, what) {}
};

// Dimension/alignment contract violations (mis-wired shapes, mismatched views).
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ExitCode::Config, what) {}
};

// Requested parameter scope is invalid for the given model.
class ScopeError : public Error {
public:
    explicit ScopeError(const std::string& what) : Error(ExitCode::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

class EmptyLineError : public DataError {
public:
    EmptyLineError() : DataError("line is empty after trimming") {}
};

class EmptyCorpusError : public DataError {
public:
    explicit EmptyCorpusError(const std::string& what = "corpus is empty") : DataError(what) {}
};

class AlignmentError : public DataError {
public:
    AlignmentError(std::size_t source_lines, std::size_t target_lines)
        : DataError("parallel files disagree on line count: source has " +
                    std::to_string(source_lines) + " lines, target has " +
                    std::to_string(target_lines)),
          source_lines_(source_lines), target_lines_(target_lines) {}
    std::size_t source_lines() const { return source_lines_; }
    std::size_t target_lines() const { return target_lines_; }

private:
    std::size_t source_lines_;
    std::size_t target_lines_;
};

class UnknownDomainError : public DataError {
public:
    explicit UnknownDomainError(const std::string& name)
        : DataError("unknown synthetic domain generator: '" + name + "'") {}
};

class InsufficientDataError : public DataError {
public:
    InsufficientDataError(const std::string& domain_id, std::uint64_t available_words,
                          std::uint64_t required_words)
        : DataError("domain '" + domain_id + "' too small: " +
                    std::to_string(available_words) + " source words available, " +
                    std::to_string(required_words) + " required"),
          domain_id_(domain_id), available_(available_words), required_(required_words) {}
    const std::string& domain_id() const { return domain_id_; }
    std::uint64_t available_words() const { return available_; }
    std::uint64_t required_words() const { return required_; }

private:
    std::string domain_id_;
    std::uint64_t available_;
    std::uint64_t required_;
};

class PlanError : public DataError {
public:
    explicit PlanError(const std::string& what) : DataError(what) {}
};

class CheckpointError : public DataError {
public:
    explicit CheckpointError(const std::string& what) : DataError(what) {}
};

class EmptyBatchError : public DataError {
public:
    EmptyBatchError() : DataError("batch is empty") {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ExitCode::Numerical, what) {}
};

}  // namespace fsmt
