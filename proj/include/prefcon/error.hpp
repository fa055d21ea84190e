#ifndef PREFCON_ERROR_HPP
#define PREFCON_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace prefcon {

/// Root of every domain error raised by the library. `type()` is the stable
/// error name reported by the CLI (e.g. "PairingError").
class Error : public std::runtime_error
{
public:
    Error(std::string type, std::string const & message)
    : std::runtime_error(message)
    , type_(std::move(type))
    {}

    [[nodiscard]] std::string const & type() const noexcept { return type_; }

private:
    std::string type_;
};

#define PREFCON_DEFINE_ERROR(Name)                                        \
    class Name : public ::prefcon::Error                                  \
    {                                                                     \
    public:                                                               \
        explicit Name(std::string const & message) : Error(#Name, message) \
        {}                                                                \
    }

PREFCON_DEFINE_ERROR(IoError);
PREFCON_DEFINE_ERROR(SchemaError);

} // namespace prefcon

#endif // PREFCON_ERROR_HPP
