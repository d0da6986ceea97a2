#pragma once

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

// Minimal stderr logger. EITSIM_LOG=debug|info|warn|error|off (default warn).

namespace eitsim::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline Level threshold() {
    static const Level lvl = [] {
        const char* env = std::getenv("EITSIM_LOG");
        if (!env) return Level::Warn;
        const std::string v(env);
        if (v == "debug") return Level::Debug;
        if (v == "info") return Level::Info;
        if (v == "warn") return Level::Warn;
        if (v == "error") return Level::Error;
        if (v == "off") return Level::Off;
        return Level::Warn;
    }();
    return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
    if (lvl < threshold()) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[eitsim:" << names[int(lvl)] << "] " << msg << "\n";
}

inline void debug(const std::string& m) { emit(Level::Debug, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }
inline void error(const std::string& m) { emit(Level::Error, m); }

} // namespace eitsim::log
