#include "condreg/log.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace condreg {

spdlog::logger& log() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = std::make_shared<spdlog::logger>(
            "condreg", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
        l->set_pattern("[%l] %v");
        const char* env = std::getenv("CONDREG_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return *logger;
}

}  // namespace condreg
