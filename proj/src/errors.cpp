#include "hinfomax/errors.hpp"

namespace hinfomax {

int exit_code(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::usage: return 2;
        case ErrorCategory::data: return 3;
        case ErrorCategory::numerical: return 4;
    }
    return 1;
}

}  // namespace hinfomax
