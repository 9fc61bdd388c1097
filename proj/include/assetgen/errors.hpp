#pragma once

#include <stdexcept>
#include <string>

namespace assetgen
{
    // Error categories map onto CLI exit codes.
    enum class ErrorCategory
    {
        Config = 2,
        Data = 3,
        Numeric = 4,
    };

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCategory category, const std::string& what) : std::runtime_error(what), category_(category) {}

        ErrorCategory category() const noexcept { return category_; }
        int exit_code() const noexcept { return static_cast<int>(category_); }

    private:
        ErrorCategory category_;
    };

    class ConfigError : public Error
    {
    public:
        explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
    };

    // Bad or missing input data: unreadable files, malformed meshes, mismatched buffers.
    class DataError : public Error
    {
    public:
        explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
    };

    class NumericError : public Error
    {
    public:
        explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
    };

    // Mesh topology that an operation cannot accept (non-manifold input to the remesher, etc).
    class TopologyError : public DataError
    {
    public:
        explicit TopologyError(const std::string& what) : DataError(what) {}
    };
} // namespace assetgen
