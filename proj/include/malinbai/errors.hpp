#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace malinbai {

// Base class for all library errors. Carries a stable machine-readable name
// (used by the CLI, which prints it on stderr and exits 3).
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& message)
        : std::runtime_error(message), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define MALINBAI_DEFINE_ERROR(Name)                              \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& message)                \
            : Error(#Name, message) {}                           \
    }

MALINBAI_DEFINE_ERROR(SingularMatrix);
MALINBAI_DEFINE_ERROR(EmptyArmSet);
MALINBAI_DEFINE_ERROR(OutOfSpan);
MALINBAI_DEFINE_ERROR(IndexOutOfRange);
MALINBAI_DEFINE_ERROR(TiedBestArm);
MALINBAI_DEFINE_ERROR(DegenerateSpan);
MALINBAI_DEFINE_ERROR(AllPruned);
MALINBAI_DEFINE_ERROR(NotDominating);
MALINBAI_DEFINE_ERROR(InvalidPartition);
MALINBAI_DEFINE_ERROR(InsufficientBudget);
MALINBAI_DEFINE_ERROR(GenerationFailed);

#undef MALINBAI_DEFINE_ERROR

}  // namespace malinbai
