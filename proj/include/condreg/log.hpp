#pragma once

#include <spdlog/spdlog.h>

namespace condreg {

/// Library logger. Level comes from the CONDREG_LOG environment variable
/// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

}  // namespace condreg
